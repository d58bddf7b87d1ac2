#![allow(dead_code)]

use std::collections::BTreeMap;

use critavg::linalg::{c, CMatrix, CVector, C64, I};
use critavg::spectral::{self, KernelData};
use critavg::{fixtures, ProblemSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `(n, m, s)` for the seeded instance suite.
pub const SHAPES: [(usize, usize, usize); 8] =
    [(3, 1, 1), (3, 2, 2), (4, 1, 2), (4, 2, 1), (2, 1, 1), (3, 1, 2), (4, 2, 2), (2, 2, 1)];

/// Seeded instances shared by the order, solvability and oracle checks.
pub fn suite() -> Vec<ProblemSpec> {
    (1..=6u64).map(suite_instance).collect()
}

pub fn suite_instance(seed: u64) -> ProblemSpec {
    let (n, m, s) = SHAPES[(seed as usize - 1) % SHAPES.len()];
    fixtures::random_admissible(seed, n, m, s, true)
}

pub fn kernel_data(spec: &ProblemSpec) -> KernelData {
    spectral::compute_kernel_data(spec, spectral::default_rank_tol(spec)).expect("admissible problem")
}

/// Modified Gram-Schmidt; drops numerically dependent vectors.
pub fn gram_schmidt(vs: &[CVector]) -> Vec<CVector> {
    let mut out: Vec<CVector> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for q in &out {
            let p = q.dotc(&w);
            w -= q * p;
        }
        let nrm = w.norm();
        if nrm > 1e-12 * v.norm().max(1e-300) {
            out.push(w / c(nrm, 0.0));
        }
    }
    out
}

fn rand_real(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c(rng.random_range(-scale..scale), 0.0))
}

/// Problem with a known kernel structure: `A0 = S diag(0_s, λ) S⁻¹`, so the
/// kernel is spanned by the first `s` columns of `S` and the range by the
/// rest. With `force_singular` the constant part is adjusted so that
/// `A1 v ∈ range(A0)` for a random kernel vector `v`.
pub struct KernelInstance {
    pub spec: ProblemSpec,
    pub a1: CMatrix,
    pub kernel: Vec<CVector>,
    pub range: Vec<CVector>,
}

pub fn kernel_instance(seed: u64, n: usize, s: usize, force_singular: bool) -> KernelInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (sim, sim_inv) = loop {
        let sim = CMatrix::identity(n, n) + rand_real(&mut rng, n, n, 0.4);
        if let Some(inv) = sim.clone().try_inverse() {
            break (sim, inv);
        }
    };
    let mut diag = CMatrix::zeros(n, n);
    for i in s..n {
        diag[(i, i)] = c(-rng.random_range(0.5..1.5), 0.0);
    }
    let a0 = (&sim * diag * &sim_inv).map(|v| c(v.re, 0.0));

    let b1 = CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)));
    let bm1 = b1.map(|v| v.conj());
    let osc = (&bm1 * &b1 - &b1 * &bm1) / I;
    let mut b0 = rand_real(&mut rng, n, n, 0.5);
    let kernel: Vec<CVector> = (0..s).map(|j| sim.column(j).into_owned()).collect();
    let range: Vec<CVector> = (s..n).map(|j| sim.column(j).into_owned()).collect();

    if force_singular {
        let a1 = &b0 + &osc;
        let adj = sim_inv.adjoint();
        let coker = gram_schmidt(&(0..s).map(|j| adj.column(j).into_owned()).collect::<Vec<_>>());
        let mut pz = CMatrix::zeros(n, n);
        for z in &coker {
            pz += z * z.adjoint();
        }
        let mut v = CVector::zeros(n);
        for a in &kernel {
            v += a * c(rng.random_range(-1.0..1.0), 0.0);
        }
        let correction = &pz * &a1 * &v * v.transpose() / c(v.norm_squared(), 0.0);
        b0 -= correction;
        b0 = b0.map(|v| c(v.re, 0.0));
    }
    let a1 = &b0 + &osc;

    let mut b = BTreeMap::new();
    b.insert(1, b1);
    b.insert(-1, bm1);
    let spec = ProblemSpec::new(a0, b0, b, BTreeMap::new(), 1, true).expect("valid instance");
    KernelInstance { spec, a1, kernel, range }
}

/// Maximum modulus difference of two complex slices.
pub fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
