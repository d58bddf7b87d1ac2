//! Reference problems: the two three-dimensional systems with a double zero
//! eigenvalue whose Hurwitz series vanish identically, their forced variant,
//! a problem violating the no-adjoined-vector hypothesis, and seeded random
//! admissible problems.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{c, real_matrix, real_vector, CMatrix, CVector, C64};
use crate::model::ProblemSpec;
use crate::spectral::{compute_kernel_data, default_rank_tol};

fn shared_a0() -> CMatrix {
    real_matrix(&[&[0.0, 0.0, -1.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, -1.0]])
}

/// `dx/dt = (A0 + B0/ω)x` with a Lyapunov-stable averaged system.
pub fn neutral_system() -> ProblemSpec {
    let b0 = real_matrix(&[&[1.0, 0.0, -1.0], &[1.0, 1.0, -1.0], &[2.0, 2.0, -2.0]]);
    let mut spec = ProblemSpec::autonomous(shared_a0(), b0, None, true).expect("valid fixture");
    spec.label = Some("neutral".into());
    spec
}

/// Same `A0`, different `B0`; the averaged system has the root `1/ω > 0`.
pub fn unstable_system() -> ProblemSpec {
    let b0 = real_matrix(&[&[1.0, 0.0, -1.0], &[0.0, 1.0, 0.0], &[2.0, 0.0, -2.0]]);
    let mut spec = ProblemSpec::autonomous(shared_a0(), b0, None, true).expect("valid fixture");
    spec.label = Some("unstable".into());
    spec
}

/// [`neutral_system`] with forcing `d0 = (0, 0, 1)`.
pub fn forced_neutral_system() -> ProblemSpec {
    let mut spec = neutral_system();
    spec.d.insert(0, real_vector(&[0.0, 0.0, 1.0]));
    spec.label = Some("forced-neutral".into());
    spec
}

/// `A0 = diag(0, -1)`, `A1 = B0 = [[0,1],[0,0]]`: `Δ = [0]`.
pub fn degenerate() -> ProblemSpec {
    let a0 = real_matrix(&[&[0.0, 0.0], &[0.0, -1.0]]);
    let b0 = real_matrix(&[&[0.0, 1.0], &[0.0, 0.0]]);
    let mut spec = ProblemSpec::autonomous(a0, b0, Some(real_vector(&[1.0, 1.0])), true).expect("valid fixture");
    spec.label = Some("degenerate".into());
    spec
}

/// Scalar `dx/dt = -x + cos(ωt)`; not critical, used for oracle checks.
pub fn scalar_forced() -> ProblemSpec {
    let mut d = BTreeMap::new();
    d.insert(1, real_vector(&[0.5]));
    d.insert(-1, real_vector(&[0.5]));
    ProblemSpec::new(real_matrix(&[&[-1.0]]), CMatrix::zeros(1, 1), BTreeMap::new(), d, 1, true).expect("valid fixture")
}

fn sample(rng: &mut ChaCha8Rng, scale: f64, complex: bool) -> C64 {
    let re = rng.random_range(-scale..scale);
    let im = if complex { rng.random_range(-scale..scale) } else { 0.0 };
    c(re, im)
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, scale: f64, complex: bool) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| sample(rng, scale, complex))
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64, complex: bool) -> CVector {
    CVector::from_fn(n, |_, _| sample(rng, scale, complex))
}

/// A random admissible problem: `A0` similar to `diag(0,…,0, λ_{s+1},…,λ_n)`
/// with `|λ_i| ∈ [0.5, 1.5]`, all harmonics `1 ≤ |l| ≤ m` populated and a
/// well-conditioned `Δ` (smallest singular value above 0.05).
///
/// With `real_mode` the coefficients satisfy the conjugate symmetry of a
/// real system. The same `(seed, n, m, s, real_mode)` always produces the
/// same problem.
///
/// # Panics
/// If `s == 0` or `s > n`.
pub fn random_admissible(seed: u64, n: usize, m: usize, s: usize, real_mode: bool) -> ProblemSpec {
    assert!(s >= 1 && s <= n);
    let complex = !real_mode;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _attempt in 0..1000 {
        let mut sim = CMatrix::identity(n, n);
        sim += random_matrix(&mut rng, n, 0.4, complex);
        let Some(sim_inv) = sim.clone().try_inverse() else { continue };
        let mut diag = CMatrix::zeros(n, n);
        for i in s..n {
            let mag = rng.random_range(0.5..1.5);
            diag[(i, i)] = if complex {
                C64::from_polar(mag, rng.random_range(0.6..2.6))
            } else {
                c(-mag, 0.0)
            };
        }
        let a0 = &sim * diag * sim_inv;
        let a0 = if real_mode { a0.map(|v| c(v.re, 0.0)) } else { a0 };
        let b0 = random_matrix(&mut rng, n, 0.5, complex);

        let mut b = BTreeMap::new();
        let mut d = BTreeMap::new();
        d.insert(0, random_vector(&mut rng, n, 0.5, complex));
        for l in 1..=m as i64 {
            let scale = 0.5 / l as f64;
            let bl = random_matrix(&mut rng, n, scale, true);
            let dl = random_vector(&mut rng, n, scale, true);
            let (bml, dml) = if real_mode {
                (bl.map(|v| v.conj()), dl.map(|v| v.conj()))
            } else {
                (random_matrix(&mut rng, n, scale, true), random_vector(&mut rng, n, scale, true))
            };
            b.insert(l, bl);
            b.insert(-l, bml);
            d.insert(l, dl);
            d.insert(-l, dml);
        }
        let Ok(mut spec) = ProblemSpec::new(a0, b0, b, d, m, real_mode) else { continue };
        let Ok(kd) = compute_kernel_data(&spec, default_rank_tol(&spec)) else { continue };
        if kd.s != s {
            continue;
        }
        let dsv = crate::linalg::singular_values(&kd.delta);
        if dsv[s - 1] < 0.05 {
            continue;
        }
        spec.seed = Some(seed);
        spec.label = Some(format!("random-n{n}-m{m}-s{s}{}", if real_mode { "-real" } else { "" }));
        return spec;
    }
    panic!("no admissible problem found for seed {seed}");
}
