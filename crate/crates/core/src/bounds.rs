//! Normalization and the convergence constants `K`, `L`, `ω0`, with numeric
//! checks of the growth estimates on computed expansion data.
//!
//! On a normalized problem (every coefficient norm at most one) the
//! quantities `|θ_p|` and `μ_p` produced by the recursion grow no faster
//! than `(K(KL+1))^p`, which makes the series converge for `ω > ω0`.

use serde::{Deserialize, Serialize};

use crate::expansion::AsymptoticExpansion;
use crate::linalg::{c, fnorm, inf_norm, vnorm};
use crate::model::ProblemSpec;
use crate::spectral::KernelData;

/// Relative slack allowed on every inequality check.
pub const SLACK: f64 = 1e-9;

/// Rescales time `t → pt` so that `‖A0‖, ‖B0‖, ‖B_l‖, |d_l| ≤ 1`.
///
/// With `x'(t') = x(t'/p)` and `ω' = ω/p` the system keeps its form with
/// `A0/p`, `B_l/p`, `d_l/p` and `B0/p²`; `p` is the smallest value ≥ 1 that
/// brings every norm to at most one.
pub fn normalize(spec: &ProblemSpec) -> (ProblemSpec, f64) {
    let mut p = fnorm(&spec.a0).max(fnorm(&spec.b0).sqrt()).max(1.0);
    for bl in spec.b.values() {
        p = p.max(fnorm(bl));
    }
    for dl in spec.d.values() {
        p = p.max(vnorm(dl));
    }
    if p == 1.0 {
        return (spec.clone(), 1.0);
    }
    let inv = c(1.0 / p, 0.0);
    let mut out = spec.clone();
    out.a0 = &spec.a0 * inv;
    out.b0 = &spec.b0 * (inv * inv);
    for bl in out.b.values_mut() {
        *bl *= inv;
    }
    for dl in out.d.values_mut() {
        *dl *= inv;
    }
    (out, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConstants {
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub omega0: f64,
    /// Time-rescale factor of the normalization that produced the problem.
    pub scale: f64,
}

/// `K = 2m + 2`, `ω0 = K(KL + 1)` and
/// `L = max(‖W‖(1 + ‖A1‖·s·‖Δ⁻¹‖_∞), s·‖Δ⁻¹‖_∞)`, which guarantees
/// `|C_{p-1}^j| ≤ (L/s)|θ_p|` and `|x_p| ≤ L|θ_p|`. Any larger `L` is also
/// valid; `scale` is left at 1 (see [`constants_for`]).
pub fn constants(spec: &ProblemSpec, kd: &KernelData) -> ConvergenceConstants {
    let k = 2.0 * spec.m as f64 + 2.0;
    let s = kd.s as f64;
    let dinv = inf_norm(&kd.delta_inv);
    let l = (kd.w_op_norm() * (1.0 + fnorm(&kd.a1) * s * dinv)).max(s * dinv);
    ConvergenceConstants { k, l, omega0: k * (k * l + 1.0), scale: 1.0 }
}

/// Normalizes, factors and returns the constants of the normalized problem
/// with `scale` filled in, plus the normalized problem and its kernel data.
pub fn constants_for(spec: &ProblemSpec, rank_tol: f64) -> crate::Result<(ConvergenceConstants, ProblemSpec, KernelData)> {
    let (norm, scale) = normalize(spec);
    let kd = crate::spectral::compute_kernel_data(&norm, rank_tol)?;
    let mut cc = constants(&norm, &kd);
    cc.scale = scale;
    Ok((cc, norm, kd))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub theta_norms: Vec<f64>,
    pub mu: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_recursion_ok: bool,
    pub theta_bound_ok: bool,
    pub mu_bound_ok: bool,
    pub first_violation: Option<usize>,
}

fn within(value: f64, bound: f64) -> bool {
    value <= bound + SLACK * bound.abs()
}

/// Checks, for `p = 0..=p_max`,
///
/// * `|θ_p| ≤ (K(KL+1))^p` and `μ_p ≤ (K(KL+1))^p`;
/// * `φ_p ≤ K³L|θ_{p-1}| + Kφ_{p-1}` for `p ≥ 1`, where `φ_0 = 2m` and
///   `φ_p = (2m+1)μ_p + μ_{p-1} + 2mL|θ_{p-1}|`.
///
/// # Panics
/// If `p_max > exp.order`.
pub fn check_growth(exp: &AsymptoticExpansion, cc: &ConvergenceConstants, p_max: usize) -> BoundsReport {
    assert!(p_max <= exp.order, "p_max {p_max} exceeds expansion order {}", exp.order);
    let m = exp.m as f64;
    let (k, l) = (cc.k, cc.l);
    let ratio = k * (k * l + 1.0);

    let theta_norms: Vec<f64> = exp.levels[..=p_max].iter().map(|lv| vnorm(&lv.theta)).collect();
    let mu: Vec<f64> = exp.levels[..=p_max].iter().map(|lv| lv.mu).collect();
    let mut phi = vec![2.0 * m];
    for p in 1..=p_max {
        phi.push((2.0 * m + 1.0) * mu[p] + mu[p - 1] + 2.0 * m * l * theta_norms[p - 1]);
    }

    let (mut phi_recursion_ok, mut theta_bound_ok, mut mu_bound_ok) = (true, true, true);
    let mut first_violation = None;
    for p in 0..=p_max {
        let bound = ratio.powi(p as i32);
        let l2 = within(theta_norms[p], bound);
        let mb = within(mu[p], bound);
        let l1 = p == 0 || within(phi[p], k.powi(3) * l * theta_norms[p - 1] + k * phi[p - 1]);
        phi_recursion_ok &= l1;
        theta_bound_ok &= l2;
        mu_bound_ok &= mb;
        if first_violation.is_none() && !(l1 && l2 && mb) {
            first_violation = Some(p);
        }
    }
    BoundsReport { theta_norms, mu, phi, phi_recursion_ok, theta_bound_ok, mu_bound_ok, first_violation }
}

/// Upper bounds `|x_k| + Σ_l|y_k,l| + |Σ_j C_k^j a_j|` on the sup norm of the
/// order-`k` terms, weighted by `ω^{-k}`, for `k = 0..=exp.order`.
pub fn term_norms(exp: &AsymptoticExpansion, omega: f64) -> Vec<f64> {
    exp.levels
        .iter()
        .enumerate()
        .map(|(k, lv)| {
            let sup = vnorm(&lv.x) + lv.y.coefficient_l1() + vnorm(&exp.basis.combine(&lv.c));
            sup * omega.powi(-(k as i32))
        })
        .collect()
}

/// Constant `C = (2mL + L + 1) + L·K(KL+1)` for which the weighted term norms
/// stay below `C·2^{-k}` whenever `ω ≥ 2ω0`.
pub fn tail_constant(m: usize, cc: &ConvergenceConstants) -> f64 {
    let m = m as f64;
    (2.0 * m * cc.l + cc.l + 1.0) + cc.l * cc.k * (cc.k * cc.l + 1.0)
}
