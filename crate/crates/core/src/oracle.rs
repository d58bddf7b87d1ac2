//! Independent reference solutions by direct numerical integration.
//!
//! The periodic solution is obtained from the monodromy matrix: with
//! `Ψ = Φ(T) − I` and `F` the response at `T` to the forcing from zero
//! initial data, `x(0)` solves `−Ψ x(0) = F`. All integrations are carried
//! out in increment form (`u = Φ(t)e_j − e_j`, `w = x(t) − x(0)`), so that
//! the large constant part of the critical-case solution never enters a
//! subtraction.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::{partial_sum, partial_sum_derivative, AsymptoticExpansion};
use crate::integrator::Dop853;
use crate::linalg::{self, c, vnorm, CMatrix, CVector, C64};
use crate::model::ProblemSpec;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const PERIODICITY_TOL: f64 = 1e-9;
pub const RESIDUAL_TOL: f64 = 1e-8;
pub const UNIT_CIRCLE_BAND: f64 = 1e-8;
pub const UNIQUENESS_TOL: f64 = 1e-10;

/// Integration controls shared by the oracle routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Relative and absolute local error tolerance.
    pub tol: f64,
    /// Minimum number of steps per period and per harmonic.
    pub steps_per_period: usize,
    /// Number of equispaced samples over one period.
    pub samples: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { tol: DEFAULT_TOL, steps_per_period: 32, samples: 64 }
    }
}

fn period(omega: f64) -> f64 {
    TAU / omega
}

fn stepper(spec: &ProblemSpec, omega: f64, opts: &OracleOptions) -> Dop853 {
    let h_max = period(omega) / (opts.steps_per_period.max(16) * spec.m.max(1)) as f64;
    Dop853::new(opts.tol, h_max)
}

fn check_omega(omega: f64) -> Result<()> {
    if omega > 0.0 && omega.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("omega must be positive and finite, got {omega}")))
    }
}

/// `x(t1)` for the full system started from `x(t0) = x0`, with steps no
/// longer than a sixteenth of a period.
pub fn integrate(spec: &ProblemSpec, omega: f64, x0: &CVector, t0: f64, t1: f64, tol: f64) -> Result<CVector> {
    check_omega(omega)?;
    let opts = OracleOptions { tol, ..OracleOptions::default() };
    stepper(spec, omega, &opts).integrate(|t, x| spec.vector_field(omega, t, x), t0, x0, t1)
}

/// `Ψ = Φ(T) − I` for the homogeneous system over one period.
#[derive(Debug, Clone)]
pub struct Monodromy {
    pub omega: f64,
    pub psi: CMatrix,
}

impl Monodromy {
    pub fn compute(spec: &ProblemSpec, omega: f64, opts: &OracleOptions) -> Result<Self> {
        check_omega(omega)?;
        let n = spec.n;
        let int = stepper(spec, omega, opts);
        let t_end = period(omega);
        let cols: Vec<CVector> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut ej = CVector::zeros(n);
                ej[j] = c(1.0, 0.0);
                int.integrate(
                    |t, u| spec.coefficient_at(omega, t) * (&ej + u),
                    0.0,
                    &CVector::zeros(n),
                    t_end,
                )
            })
            .collect::<Result<_>>()?;
        Ok(Monodromy { omega, psi: CMatrix::from_columns(&cols) })
    }

    pub fn phi(&self) -> CMatrix {
        &self.psi + CMatrix::identity(self.psi.nrows(), self.psi.ncols())
    }

    /// Smallest singular value of `I − Φ(T)`.
    pub fn sigma_min(&self) -> f64 {
        linalg::smallest_singular_value(&self.psi)
    }

    /// Floquet multipliers `1 + eig(Ψ)`.
    pub fn multipliers(&self) -> Vec<C64> {
        linalg::eigenvalues(&self.psi).into_iter().map(|l| l + 1.0).collect()
    }

    /// `max |μ| − 1`, evaluated without cancellation as
    /// `(2 Re λ + |λ|²)/(|1 + λ| + 1)` over `λ ∈ eig(Ψ)`.
    pub fn margin(&self) -> f64 {
        linalg::eigenvalues(&self.psi)
            .into_iter()
            .map(|l| (2.0 * l.re + l.norm_sqr()) / ((l + 1.0).norm() + 1.0))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn require_unique(&self) -> Result<f64> {
        let sigma_min = self.sigma_min();
        if sigma_min > UNIQUENESS_TOL {
            Ok(sigma_min)
        } else {
            Err(Error::NonUnique { omega: self.omega, sigma_min })
        }
    }
}

type Forcing<'a> = dyn Fn(f64) -> CVector + Sync + 'a;

/// Periodic solution of `x' = A(t)x + g(t)`: the initial value, the offsets
/// `x(t_i) − x(0)` at `samples` equispaced points, and `x(T) − x(0)`.
fn periodic_orbit(
    spec: &ProblemSpec,
    omega: f64,
    mono: &Monodromy,
    g: &Forcing,
    opts: &OracleOptions,
) -> Result<(CVector, Vec<CVector>, CVector)> {
    let n = spec.n;
    let int = stepper(spec, omega, opts);
    let t_end = period(omega);
    let zero = CVector::zeros(n);

    let forced = int.integrate(|t, v| spec.coefficient_at(omega, t) * v + g(t), 0.0, &zero, t_end)?;
    let x0 = if forced.iter().all(|v| *v == C64::new(0.0, 0.0)) {
        zero.clone()
    } else {
        let neg_psi = -&mono.psi;
        linalg::solve(&neg_psi, &forced).ok_or(Error::NonUnique { omega, sigma_min: 0.0 })?
    };

    let samples = opts.samples.max(2);
    let dt = t_end / samples as f64;
    let mut offsets = Vec::with_capacity(samples);
    let mut w = zero;
    offsets.push(w.clone());
    for i in 0..samples {
        let (ta, tb) = (i as f64 * dt, if i + 1 == samples { t_end } else { (i + 1) as f64 * dt });
        w = int.integrate(|t, w| spec.coefficient_at(omega, t) * (&x0 + w) + g(t), ta, &w, tb)?;
        if i + 1 < samples {
            offsets.push(w.clone());
        }
    }
    Ok((x0, offsets, w))
}

/// Sampled periodic solution with its monodromy data.
#[derive(Debug, Clone)]
pub struct PeriodicOracleSolution {
    pub omega: f64,
    pub x0: CVector,
    pub monodromy: CMatrix,
    /// `(t_i, x(t_i))` at `t_i = iT/N`, `i < N`.
    pub samples: Vec<(f64, CVector)>,
    /// `x(t_i) − x(0)`, kept apart from `x0` to avoid cancellation.
    pub offsets: Vec<CVector>,
    pub floquet: Vec<C64>,
    pub unique: bool,
    pub sigma_min: f64,
    /// `‖x(T) − x(0)‖ / (1 + ‖x(0)‖)`.
    pub periodicity_defect: f64,
}

pub fn periodic_solution(spec: &ProblemSpec, omega: f64, tol: f64) -> Result<PeriodicOracleSolution> {
    periodic_solution_with(spec, omega, &OracleOptions { tol, ..OracleOptions::default() })
}

pub fn periodic_solution_with(spec: &ProblemSpec, omega: f64, opts: &OracleOptions) -> Result<PeriodicOracleSolution> {
    let mono = Monodromy::compute(spec, omega, opts)?;
    let sigma_min = mono.require_unique()?;
    let g = |t: f64| spec.forcing_at(omega, t);
    let (x0, offsets, w_end) = periodic_orbit(spec, omega, &mono, &g, opts)?;
    let dt = period(omega) / offsets.len() as f64;
    let samples = offsets
        .iter()
        .enumerate()
        .map(|(i, w)| (i as f64 * dt, &x0 + w))
        .collect();
    Ok(PeriodicOracleSolution {
        omega,
        periodicity_defect: vnorm(&w_end) / (1.0 + vnorm(&x0)),
        monodromy: mono.phi(),
        floquet: mono.multipliers(),
        x0,
        samples,
        offsets,
        unique: true,
        sigma_min,
    })
}

/// Trigonometric interpolant of equispaced periodic samples.
struct TrigInterpolant {
    coeffs: Vec<(f64, CVector)>,
}

impl TrigInterpolant {
    fn new(values: &[CVector]) -> Self {
        let big_n = values.len();
        let n = values[0].len();
        let half = big_n / 2;
        let mut coeffs = Vec::with_capacity(big_n + 1);
        for k in -(half as i64)..=(half as i64) {
            let mut ck = CVector::zeros(n);
            for (i, v) in values.iter().enumerate() {
                let ang = -TAU * (k * i as i64) as f64 / big_n as f64;
                ck += v * C64::from_polar(1.0, ang);
            }
            let mut w = 1.0 / big_n as f64;
            if big_n % 2 == 0 && k.unsigned_abs() as usize == half {
                w *= 0.5;
            }
            coeffs.push((k as f64, ck * c(w, 0.0)));
        }
        TrigInterpolant { coeffs }
    }

    /// Value and `τ`-derivative at `τ`.
    fn eval(&self, tau: f64) -> (CVector, CVector) {
        let n = self.coeffs[0].1.len();
        let (mut v, mut dv) = (CVector::zeros(n), CVector::zeros(n));
        for (k, ck) in &self.coeffs {
            let e = C64::from_polar(1.0, k * tau);
            v += ck * e;
            dv += ck * (e * c(0.0, *k));
        }
        (v, dv)
    }
}

/// Largest relative ODE residual of the sampled solution at the sample
/// midpoints, `|x'(t) − f(t, x(t))| / (1 + max|f|)`, with `x` and `x'` taken
/// from the trigonometric interpolant of the offsets.
pub fn solution_residual(spec: &ProblemSpec, sol: &PeriodicOracleSolution) -> f64 {
    let interp = TrigInterpolant::new(&sol.offsets);
    let big_n = sol.offsets.len();
    let omega = sol.omega;
    let mut worst_res: f64 = 0.0;
    let mut worst_f: f64 = 0.0;
    for i in 0..big_n {
        let tau = TAU * (i as f64 + 0.5) / big_n as f64;
        let t = tau / omega;
        let (w, dw) = interp.eval(tau);
        let f = spec.vector_field(omega, t, &(&sol.x0 + w));
        worst_res = worst_res.max(vnorm(&(dw * c(omega, 0.0) - &f)));
        worst_f = worst_f.max(vnorm(&f));
    }
    worst_res / (1.0 + worst_f)
}

/// `max_i ‖x(t_i) − S_r(t_i)‖` over one period, where `x` is the exact
/// periodic solution.
///
/// The difference `e = x − S_r` is itself the periodic solution of
/// `e' = A(t)e + ρ(t)` with `ρ = f(t, S_r) − S_r'`, so it is computed
/// directly from that equation rather than by subtracting two nearly equal
/// large vectors.
pub fn approximation_error(
    spec: &ProblemSpec,
    exp: &AsymptoticExpansion,
    r: usize,
    omega: f64,
    opts: &OracleOptions,
) -> Result<f64> {
    let mono = Monodromy::compute(spec, omega, opts)?;
    mono.require_unique()?;
    let rho = |t: f64| spec.vector_field(omega, t, &partial_sum(exp, r, omega, t)) - partial_sum_derivative(exp, r, omega, t);
    let (e0, offsets, _) = periodic_orbit(spec, omega, &mono, &rho, opts)?;
    Ok(offsets.iter().map(|w| vnorm(&(&e0 + w))).fold(0.0, f64::max))
}

/// Errors `E(ω)` and the least-squares slope of `log E` against `log ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub order: usize,
    pub omegas: Vec<f64>,
    pub errors: Vec<f64>,
    /// `None` when some error is zero or not finite (nothing to fit).
    pub slope: Option<f64>,
}

/// Least-squares slope of `log y` against `log x`; `None` if any value is
/// not positive and finite.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    if !xs.iter().chain(ys).all(|v| v.is_finite() && *v > 0.0) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Empirical order of the `r`-th partial sum: expected slope `−(r+1)`.
pub fn error_slope(spec: &ProblemSpec, exp: &AsymptoticExpansion, r: usize, omegas: &[f64]) -> Result<SlopeFit> {
    error_slope_with(spec, exp, r, omegas, &OracleOptions::default())
}

pub fn error_slope_with(
    spec: &ProblemSpec,
    exp: &AsymptoticExpansion,
    r: usize,
    omegas: &[f64],
    opts: &OracleOptions,
) -> Result<SlopeFit> {
    if omegas.len() < 3 {
        return Err(Error::InvalidArgument("need at least three frequencies".into()));
    }
    if omegas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("frequencies must be strictly increasing".into()));
    }
    if r > exp.order {
        return Err(Error::InvalidArgument(format!("order {r} exceeds expansion order {}", exp.order)));
    }
    let errors: Vec<f64> = omegas
        .par_iter()
        .map(|&w| approximation_error(spec, exp, r, w, opts))
        .collect::<Result<_>>()?;
    Ok(SlopeFit { order: r, omegas: omegas.to_vec(), slope: loglog_slope(omegas, &errors), errors })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FloquetKind {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloquetVerdict {
    pub kind: FloquetKind,
    /// `max |μ| − 1`.
    pub margin: f64,
    /// Multiplier moduli, descending.
    pub moduli: Vec<f64>,
}

/// Separation below which multipliers are treated as one cluster.
const CLUSTER_TOL: f64 = 1e-6;

/// Lyapunov stability of the homogeneous system from its multipliers.
///
/// Multipliers on the unit circle (within the band) must be semisimple:
/// for a cluster of `k` nearby multipliers, `Φ − μI` must have `k` singular
/// values below the cluster tolerance. Otherwise the verdict is refused.
pub fn floquet_verdict(spec: &ProblemSpec, omega: f64) -> Result<FloquetVerdict> {
    floquet_verdict_with(spec, omega, &OracleOptions::default())
}

pub fn floquet_verdict_with(spec: &ProblemSpec, omega: f64, opts: &OracleOptions) -> Result<FloquetVerdict> {
    let mono = Monodromy::compute(spec, omega, opts)?;
    let margin = mono.margin();
    let mus = mono.multipliers();
    let mut moduli: Vec<f64> = mus.iter().map(|m| m.norm()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    if margin > UNIT_CIRCLE_BAND {
        return Ok(FloquetVerdict { kind: FloquetKind::Unstable, margin, moduli });
    }
    let phi = mono.phi();
    let scale = linalg::op_norm(&phi).max(1.0);
    for mu in mus.iter().filter(|m| m.norm() >= 1.0 - UNIT_CIRCLE_BAND) {
        let cluster = mus.iter().filter(|o| (*o - mu).norm() < CLUSTER_TOL).count();
        if cluster < 2 {
            continue;
        }
        let shifted = &phi - CMatrix::identity(spec.n, spec.n) * *mu;
        let nullity = linalg::singular_values(&shifted)
            .iter()
            .filter(|s| **s < CLUSTER_TOL * scale)
            .count();
        if nullity < cluster {
            return Err(Error::BoundaryUndecidable { modulus: mu.norm() });
        }
    }
    Ok(FloquetVerdict { kind: FloquetKind::Stable, margin, moduli })
}
