//! Coefficient recursion for the asymptotic series
//!
//! ```text
//! x(t) = ω Σ_j C_{-1}^j a_j + Σ_{k≥0} ω^{-k} (x_k + y_k(ωt) + Σ_j C_k^j a_j)
//! ```
//!
//! Each order `p` fixes `C_{p-1}` through the solvability system
//! `Δ C_{p-1} = -((θ_p, z_k))_k`, then `x_p = -W(A1 Σ C_{p-1}^j a_j + θ_p)`,
//! then the oscillating part of the next order by integrating the zero-mean
//! part of the order-`p` right-hand side. All trigonometric data is kept as
//! exact Fourier-coefficient maps.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, vnorm, CVector, C64, I};
use crate::model::{complex_serde, ProblemSpec, TrigVectorPoly};
use crate::spectral::KernelData;

/// One order of the expansion.
#[derive(Debug, Clone)]
pub struct ExpansionLevel {
    pub x: CVector,
    /// `C_k^j`, `j = 1..s`.
    pub c: Vec<C64>,
    pub y: TrigVectorPoly,
    /// The `β^k_l`: `y_k` minus its `Σ B_l/(il) (Σ C_{k-1}^j a_j)` part.
    pub beta: TrigVectorPoly,
    pub theta: CVector,
    /// `Σ_l |β^k_l|`.
    pub mu: f64,
}

#[derive(Debug, Clone)]
pub struct AsymptoticExpansion {
    pub order: usize,
    pub n: usize,
    pub m: usize,
    /// `C_{-1}^j`.
    pub c_lead: Vec<C64>,
    pub levels: Vec<ExpansionLevel>,
    /// `|Z*(A1 Σ C_{p-1}^j a_j + θ_p)|` after each solvability solve,
    /// `p = 0..=order+1`.
    pub fredholm_defects: Vec<f64>,
    /// `θ_{order+1}`, produced by the last internal step.
    pub theta_next: CVector,
    pub basis: KernelData,
}

/// Fourier-coefficient accumulator that tolerates a mean term.
struct Harmonics {
    n: usize,
    terms: BTreeMap<i64, CVector>,
}

impl Harmonics {
    fn new(n: usize) -> Self {
        Harmonics { n, terms: BTreeMap::new() }
    }

    fn add(&mut self, l: i64, v: CVector) {
        match self.terms.get_mut(&l) {
            Some(e) => *e += v,
            None => {
                self.terms.insert(l, v);
            }
        }
    }

    fn add_poly(&mut self, p: &TrigVectorPoly) {
        for (&l, v) in p.coeffs() {
            self.add(l, v.clone());
        }
    }

    /// Zero-mean primitive of the oscillating part; the mean is discarded.
    fn oscillating_antiderivative(self) -> TrigVectorPoly {
        let n = self.n;
        let terms = self
            .terms
            .into_iter()
            .filter(|(l, _)| *l != 0)
            .map(|(l, v)| (l, v / (I * l as f64)))
            .collect();
        TrigVectorPoly::from_map(n, terms)
    }
}

/// `Σ_{l≠0} B_l v e^{ilτ}` convolved with `p`: adds `B_l p_{l'}` at `l + l'`.
fn convolve(spec: &ProblemSpec, p: &TrigVectorPoly, out: &mut Harmonics) {
    for (&l2, bl) in &spec.b {
        for (&l1, v) in p.coeffs() {
            out.add(l1 + l2, bl * v);
        }
    }
}

/// `Σ_l B_l/(il) v e^{ilτ}`.
fn kernel_response(spec: &ProblemSpec, v: &CVector) -> TrigVectorPoly {
    let mut p = TrigVectorPoly::zero(spec.n);
    for (&l, bl) in &spec.b {
        p.add_term(l, &(bl * v / (I * l as f64)));
    }
    p
}

/// Runs the recursion through internal order `r + 1`, so that every
/// `C_k`, `k ≤ r`, is determined.
pub fn expand(spec: &ProblemSpec, kd: &KernelData, r: usize) -> Result<AsymptoticExpansion> {
    let n = spec.n;
    if kd.a.first().map(|a| a.len()) != Some(n) {
        return Err(Error::InvalidArgument("kernel data does not match the problem dimension".into()));
    }
    let d0 = spec.d0();
    let d_osc = spec.oscillating_forcing();

    let mut levels: Vec<ExpansionLevel> = Vec::with_capacity(r + 1);
    let mut fredholm_defects = Vec::with_capacity(r + 2);
    let mut c_lead = vec![C64::new(0.0, 0.0); kd.s];

    // State carried from order p-1 into order p.
    let mut x_prev = CVector::zeros(n);
    let mut y_prev = TrigVectorPoly::zero(n);
    let mut beta = TrigVectorPoly::zero(n);
    let mut theta_next = CVector::zeros(n);

    for p in 0..=r + 1 {
        let theta = if p == 0 {
            d0.clone()
        } else {
            let mut t = &spec.b0 * &x_prev;
            for (&l, bl) in &spec.b {
                if let Some(bt) = beta.coeff(-l) {
                    t += bl * bt;
                }
            }
            t
        };

        let rhs: Vec<C64> = kd.project_z(&theta).into_iter().map(|v| -v).collect();
        let c_prev = kd.solve_delta(&rhs);
        let kernel_part = kd.combine(&c_prev);
        let g = &kd.a1 * &kernel_part + &theta;
        fredholm_defects.push(kd.project_z(&g).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt());

        if p == 0 {
            c_lead = c_prev;
        } else {
            levels[p - 1].c = c_prev;
        }
        if p == r + 1 {
            theta_next = theta;
            break;
        }

        let x = -(&kd.w * &g);
        let mut y = kernel_response(spec, &kernel_part);
        y.add(&beta);

        // Oscillating part of the order-p right-hand side without the
        // still-unknown Σ B_l C_p e^{ilτ} term.
        let mut acc = Harmonics::new(n);
        acc.add_poly(&y.left_mul(&spec.a0));
        acc.add_poly(&y_prev.left_mul(&spec.b0));
        for (&l, bl) in &spec.b {
            acc.add(l, bl * &x);
        }
        convolve(spec, &y, &mut acc);
        if p == 0 {
            acc.add_poly(&d_osc);
        }
        let beta_next = acc.oscillating_antiderivative();

        let mu = beta.coefficient_l1();
        levels.push(ExpansionLevel {
            x: x.clone(),
            c: Vec::new(),
            y: y.clone(),
            beta: std::mem::replace(&mut beta, beta_next),
            theta,
            mu,
        });
        x_prev = x;
        y_prev = y;
    }

    Ok(AsymptoticExpansion {
        order: r,
        n,
        m: spec.m,
        c_lead,
        levels,
        fredholm_defects,
        theta_next,
        basis: kd.clone(),
    })
}

impl AsymptoticExpansion {
    /// `Σ_j C_{-1}^j a_j`.
    pub fn lead_vector(&self) -> CVector {
        self.basis.combine(&self.c_lead)
    }

    /// `x_k + y_k(τ) + Σ_j C_k^j a_j`.
    pub fn term(&self, k: usize, tau: f64) -> CVector {
        let lv = &self.levels[k];
        &lv.x + lv.y.eval(tau) + self.basis.combine(&lv.c)
    }
}

/// `S_ω^{(r)}(t) = ω Σ C_{-1}^j a_j + Σ_{k≤r} ω^{-k}(x_k + y_k(ωt) + Σ C_k^j a_j)`.
///
/// # Panics
/// If `r > exp.order`.
pub fn partial_sum(exp: &AsymptoticExpansion, r: usize, omega: f64, t: f64) -> CVector {
    assert!(r <= exp.order, "partial sum order {r} exceeds expansion order {}", exp.order);
    let tau = omega * t;
    let mut s = exp.lead_vector() * c(omega, 0.0);
    let mut w = 1.0;
    for k in 0..=r {
        s += exp.term(k, tau) * c(w, 0.0);
        w /= omega;
    }
    s
}

/// Time derivative of [`partial_sum`], from the Fourier coefficients.
pub fn partial_sum_derivative(exp: &AsymptoticExpansion, r: usize, omega: f64, t: f64) -> CVector {
    assert!(r <= exp.order);
    let tau = omega * t;
    let mut ds = CVector::zeros(exp.n);
    let mut w = omega;
    for k in 0..=r {
        ds += exp.levels[k].y.derivative().eval(tau) * c(w, 0.0);
        w /= omega;
    }
    ds
}

/// Largest ODE residual `|dS/dt - (A0 + B0/ω)S - Σ(B_l S + d_l)e^{ilωt} - d_0|`
/// of the `r`-th partial sum over `samples` equispaced points of one period.
pub fn ode_residual(spec: &ProblemSpec, exp: &AsymptoticExpansion, r: usize, omega: f64, samples: usize) -> Result<f64> {
    if samples < 8 {
        return Err(Error::InvalidArgument(format!("need at least 8 samples, got {samples}")));
    }
    let period = TAU / omega;
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let t = period * i as f64 / samples as f64;
        let s = partial_sum(exp, r, omega, t);
        let ds = partial_sum_derivative(exp, r, omega, t);
        let res = ds - spec.vector_field(omega, t, &s);
        worst = worst.max(vnorm(&res));
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicVector {
    pub l: i64,
    #[serde(with = "complex_serde::vec")]
    pub v: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelExport {
    pub k: usize,
    #[serde(rename = "C", with = "complex_serde::vec")]
    pub c: Vec<C64>,
    #[serde(with = "complex_serde::vec")]
    pub x: Vec<C64>,
    pub beta: Vec<HarmonicVector>,
    pub y: Vec<HarmonicVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionExport {
    pub order: usize,
    pub n: usize,
    pub m: usize,
    pub s: usize,
    /// The kernel basis `{a_j}` the coefficients refer to.
    pub basis: Vec<HarmonicVector>,
    #[serde(rename = "C_lead", with = "complex_serde::vec")]
    pub c_lead: Vec<C64>,
    pub levels: Vec<LevelExport>,
}

fn harmonics(p: &TrigVectorPoly) -> Vec<HarmonicVector> {
    p.coeffs()
        .iter()
        .map(|(&l, v)| HarmonicVector { l, v: v.iter().copied().collect() })
        .collect()
}

impl AsymptoticExpansion {
    pub fn export(&self) -> ExpansionExport {
        ExpansionExport {
            order: self.order,
            n: self.n,
            m: self.m,
            s: self.basis.s,
            basis: self
                .basis
                .a
                .iter()
                .enumerate()
                .map(|(j, a)| HarmonicVector { l: j as i64 + 1, v: a.iter().copied().collect() })
                .collect(),
            c_lead: self.c_lead.clone(),
            levels: self
                .levels
                .iter()
                .enumerate()
                .map(|(k, lv)| LevelExport {
                    k,
                    c: lv.c.clone(),
                    x: lv.x.iter().copied().collect(),
                    beta: harmonics(&lv.beta),
                    y: harmonics(&lv.y),
                })
                .collect(),
        }
    }
}
