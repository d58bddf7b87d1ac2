//! Formal averaging of the homogeneous system and the Hurwitz-series
//! stability test.
//!
//! The substitution `x = (I + Σ_{k≥1} ω^{-k} U_k(ωt)) y` with zero-mean
//! trigonometric `U_k` turns `dx/dt = (A0 + B0/ω + Σ B_l e^{ilωt}) x` into
//! the autonomous `dy/dt = (Σ_k ω^{-k} A_k) y`. Matching powers of `ω⁻¹` in
//! `ω P_τ = A P − P Ā` gives, with `U_0 = I`,
//!
//! ```text
//! G_j     = A0 U_j + B(τ) U_j + B0 U_{j-1} − Σ_{i=1..j} U_i A_{j-i}
//! A_j     = mean(G_j)
//! U_{j+1} = primitive of G_j − A_j
//! ```

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{fnorm, CMatrix, C64};
use crate::model::{ProblemSpec, TrigMatrixPoly};
use crate::series::{MatrixSeries, ScalarSeries};

pub const DEFAULT_TRUNC: usize = 6;
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;

/// The averaged series `A_ω = Σ ω^{-k} A_k` together with the
/// transformation `P = I + Σ ω^{-k} U_k`.
#[derive(Debug, Clone)]
pub struct FormalAverage {
    pub series: MatrixSeries,
    /// `U_0 = I, U_1, …, U_N`.
    pub transforms: Vec<TrigMatrixPoly>,
}

impl FormalAverage {
    pub fn trunc(&self) -> usize {
        self.series.trunc()
    }
}

/// Builds `A_0…A_N` and `U_1…U_N`.
pub fn formal_average(spec: &ProblemSpec, trunc: usize) -> Result<FormalAverage> {
    if !spec.real_mode {
        return Err(Error::NotReal);
    }
    if trunc < 1 {
        return Err(Error::InvalidArgument("truncation order must be at least 1".into()));
    }
    let n = spec.n;
    let b = spec.oscillating_matrix();
    let mut u: Vec<TrigMatrixPoly> = vec![TrigMatrixPoly::constant(&CMatrix::identity(n, n))];
    let mut a: Vec<CMatrix> = Vec::with_capacity(trunc + 1);

    for j in 0..=trunc {
        let mut g = u[j].left_mul(&spec.a0);
        g.add(&b.mul(&u[j]));
        if j >= 1 {
            g.add(&u[j - 1].left_mul(&spec.b0));
        }
        for i in 1..=j {
            g.sub(&u[i].right_mul(&a[j - i]));
        }
        a.push(g.mean());
        if j < trunc {
            u.push(g.oscillating().antiderivative());
        }
    }
    Ok(FormalAverage { series: MatrixSeries::from_coeffs(a), transforms: u })
}

/// Largest Frobenius norm over `samples` points of one period of
/// `ω P_τ + P Ā − A(t) P`, with `P` and `Ā` truncated at the order of `fa`.
/// Decays like `ω^{-N}`.
pub fn conjugation_residual(spec: &ProblemSpec, fa: &FormalAverage, omega: f64, samples: usize) -> f64 {
    let n = spec.n;
    let abar = fa.series.eval(omega);
    let derivs: Vec<TrigMatrixPoly> = fa.transforms.iter().map(|u| u.derivative()).collect();
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let tau = TAU * i as f64 / samples as f64;
        let t = tau / omega;
        let mut p = CMatrix::zeros(n, n);
        let mut p_tau = CMatrix::zeros(n, n);
        let mut w = 1.0;
        for (u, du) in fa.transforms.iter().zip(&derivs) {
            p += u.eval(tau) * C64::new(w, 0.0);
            p_tau += du.eval(tau) * C64::new(w, 0.0);
            w /= omega;
        }
        let res = p_tau * C64::new(omega, 0.0) + &p * &abar - spec.coefficient_at(omega, t) * &p;
        worst = worst.max(fnorm(&res));
    }
    worst
}

/// Coefficients `α_1…α_n` of `det(λI − A_ω) = λ^n + α_1 λ^{n-1} + … + α_n`
/// by the Faddeev–LeVerrier recursion over truncated series.
pub fn char_poly_series(ms: &MatrixSeries) -> Vec<ScalarSeries> {
    let n = ms.dim();
    let trunc = ms.trunc();
    let mut alphas = Vec::with_capacity(n);
    let mut m = MatrixSeries::identity(n, trunc);
    for k in 1..=n {
        if k > 1 {
            m = (ms * &m).add_scalar_identity(&alphas[k - 2]);
        }
        let am = ms * &m;
        alphas.push(am.trace().scale(C64::new(-1.0 / k as f64, 0.0)));
    }
    alphas
}

/// Leading principal minors `D_1…D_n` of the Hurwitz matrix
/// `H_ij = α_{2i-j}` (1-based, `α_0 = 1`, `α_k = 0` outside `0..=n`).
///
/// # Panics
/// If `alphas.len() != n`.
pub fn hurwitz_series(alphas: &[ScalarSeries], n: usize) -> Vec<ScalarSeries> {
    assert_eq!(alphas.len(), n, "need exactly n characteristic coefficients");
    if n == 0 {
        return Vec::new();
    }
    let trunc = alphas.iter().map(|a| a.trunc()).min().unwrap_or(0);
    let alpha = |k: i64| -> Option<ScalarSeries> {
        match k {
            0 => Some(ScalarSeries::constant(C64::new(1.0, 0.0), trunc)),
            k if k >= 1 && k as usize <= n => Some(alphas[k as usize - 1].truncate(trunc)),
            _ => None,
        }
    };
    let h: Vec<Vec<Option<ScalarSeries>>> = (1..=n as i64)
        .map(|i| (1..=n as i64).map(|j| alpha(2 * i - j)).collect())
        .collect();
    (1..=n).map(|k| leading_minor(&h, k, trunc)).collect()
}

/// Determinant of the top-left `k×k` block by row-wise Laplace expansion
/// over column subsets; `None` entries are structural zeros.
fn leading_minor(h: &[Vec<Option<ScalarSeries>>], k: usize, trunc: usize) -> ScalarSeries {
    let zero = ScalarSeries::zero(trunc);
    let mut dp: Vec<Option<ScalarSeries>> = vec![None; 1 << k];
    dp[0] = Some(ScalarSeries::constant(C64::new(1.0, 0.0), trunc));
    for mask in 0usize..(1 << k) {
        let Some(acc) = dp[mask].take() else { continue };
        let row = mask.count_ones() as usize;
        if row == k {
            dp[mask] = Some(acc);
            continue;
        }
        for col in 0..k {
            if mask & (1 << col) != 0 {
                continue;
            }
            let Some(entry) = &h[row][col] else { continue };
            let above = (mask >> (col + 1)).count_ones();
            let mut term = &acc * entry;
            if above % 2 == 1 {
                term = -&term;
            }
            let next = mask | (1 << col);
            dp[next] = Some(match dp[next].take() {
                Some(prev) => &prev + &term,
                None => term,
            });
        }
    }
    dp[(1 << k) - 1].take().unwrap_or(zero)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityKind {
    Stable,
    Unstable,
    Inconclusive,
}

/// First coefficient of `D_j` above the zero threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Leading {
    Found { q: usize, d: f64 },
    ZeroThrough { order: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub kind: StabilityKind,
    pub leading: Vec<Leading>,
    pub trunc: usize,
    pub zero_tol: f64,
    pub note: String,
}

/// Classifies by the signs of the first non-negligible coefficients.
///
/// A coefficient `d_jq` counts as nonzero when
/// `|d_jq| > zero_tol·max(1, max_q |d_jq|)`. Any negative leader makes the
/// verdict unstable; otherwise a determinant that vanishes through the
/// truncation order makes it inconclusive.
pub fn classify(ds: &[ScalarSeries], zero_tol: f64) -> Result<StabilityVerdict> {
    if !(zero_tol > 0.0) {
        return Err(Error::InvalidArgument(format!("zero_tol must be positive, got {zero_tol}")));
    }
    let trunc = ds.iter().map(|d| d.trunc()).min().unwrap_or(0);
    let leading: Vec<Leading> = ds
        .iter()
        .map(|d| {
            let thresh = zero_tol * d.max_abs().max(1.0);
            d.coeffs()
                .iter()
                .take(trunc + 1)
                .position(|v| v.norm() > thresh)
                .map(|q| Leading::Found { q, d: d.coeff(q).re })
                .unwrap_or(Leading::ZeroThrough { order: trunc })
        })
        .collect();

    let negative: Vec<usize> = leading
        .iter()
        .enumerate()
        .filter(|(_, l)| matches!(l, Leading::Found { d, .. } if *d < 0.0))
        .map(|(j, _)| j + 1)
        .collect();
    let vanishing: Vec<usize> = leading
        .iter()
        .enumerate()
        .filter(|(_, l)| matches!(l, Leading::ZeroThrough { .. }))
        .map(|(j, _)| j + 1)
        .collect();

    let (kind, note) = if !negative.is_empty() {
        (StabilityKind::Unstable, format!("negative leading coefficient in D_j for j = {negative:?}"))
    } else if !vanishing.is_empty() {
        (
            StabilityKind::Inconclusive,
            format!("D_j for j = {vanishing:?} vanish through order {trunc}; the test cannot decide"),
        )
    } else {
        (StabilityKind::Stable, "all leading coefficients are positive".to_string())
    };
    Ok(StabilityVerdict { kind, leading, trunc, zero_tol, note })
}

/// Characteristic and Hurwitz series plus the verdict, in one pass.
#[derive(Debug, Clone)]
pub struct HurwitzAnalysis {
    pub average: FormalAverage,
    pub alphas: Vec<ScalarSeries>,
    pub minors: Vec<ScalarSeries>,
    pub verdict: StabilityVerdict,
}

pub fn hurwitz_analysis(spec: &ProblemSpec, trunc: usize, zero_tol: f64) -> Result<HurwitzAnalysis> {
    let average = formal_average(spec, trunc)?;
    let alphas = char_poly_series(&average.series);
    let minors = hurwitz_series(&alphas, spec.n);
    let verdict = classify(&minors, zero_tol)?;
    Ok(HurwitzAnalysis { average, alphas, minors, verdict })
}
