//! Zero-eigenvalue structure of `A0` and the solvability machinery that
//! drives the coefficient recursion.

use crate::error::{Error, Result};
use crate::linalg::{self, fnorm, inner, CMatrix, CVector, C64, I};
use crate::model::ProblemSpec;

/// Singularity threshold for `Δ`, relative to its largest singular value.
pub const DELTA_SINGULAR_TOL: f64 = 1e-10;

/// `A1 = B0 + Σ_{1≤|l|≤m} B_{-l} B_l / (il)`.
pub fn averaged_matrix(spec: &ProblemSpec) -> CMatrix {
    let mut a1 = spec.b0.clone();
    for (&l, bl) in &spec.b {
        if let Some(bml) = spec.b_l(-l) {
            a1 += bml * bl / (I * l as f64);
        }
    }
    a1
}

/// Default kernel threshold: `1e-9·max(‖A0‖, 1)`.
pub fn default_rank_tol(spec: &ProblemSpec) -> f64 {
    1e-9 * fnorm(&spec.a0).max(1.0)
}

/// Kernel bases of `A0` and `A0*`, the restricted inverse `W` and the
/// solvability matrix `Δ[k][j] = (A1 a_j, z_k)`.
///
/// Both bases are orthonormal; any coefficient `C^j` reported against them
/// is tied to this particular choice.
#[derive(Debug, Clone)]
pub struct KernelData {
    pub s: usize,
    pub a: Vec<CVector>,
    pub z: Vec<CVector>,
    pub delta: CMatrix,
    pub delta_inv: CMatrix,
    pub w: CMatrix,
    pub a1: CMatrix,
    pub rank_tol: f64,
    /// Singular values of `A0`, descending.
    pub singular_values: Vec<f64>,
    /// Number of eigenvalues of `A0` within `rank_tol` of zero (diagnostic).
    pub algebraic_multiplicity: usize,
}

impl KernelData {
    /// `Σ_j coeffs[j] a_j`.
    pub fn combine(&self, coeffs: &[C64]) -> CVector {
        let mut v = CVector::zeros(self.a.first().map_or(0, |a| a.len()));
        for (cj, aj) in coeffs.iter().zip(&self.a) {
            v += aj * *cj;
        }
        v
    }

    /// `((v, z_1), …, (v, z_s))`.
    pub fn project_z(&self, v: &CVector) -> Vec<C64> {
        self.z.iter().map(|zk| inner(v, zk)).collect()
    }

    /// `Δ⁻¹ b`.
    pub fn solve_delta(&self, b: &[C64]) -> Vec<C64> {
        let bv = CVector::from_column_slice(b);
        (&self.delta_inv * bv).iter().copied().collect()
    }

    pub fn det_delta(&self) -> C64 {
        self.delta.determinant()
    }

    pub fn w_op_norm(&self) -> f64 {
        linalg::op_norm(&self.w)
    }

    /// Orthogonal projector onto `span{z_k}`.
    pub fn z_projector(&self) -> CMatrix {
        let n = self.w.nrows();
        let mut p = CMatrix::zeros(n, n);
        for zk in &self.z {
            p += zk * zk.adjoint();
        }
        p
    }
}

/// Computes the kernel structure of `A0` from its singular-value
/// factorization.
pub fn compute_kernel_data(spec: &ProblemSpec, rank_tol: f64) -> Result<KernelData> {
    if !(rank_tol > 0.0) {
        return Err(Error::InvalidArgument(format!("rank_tol must be positive, got {rank_tol}")));
    }
    let n = spec.n;
    let svd = linalg::svd(&spec.a0);
    let (u, v, sv) = (&svd.u, &svd.v, &svd.s);

    let mut a = Vec::new();
    let mut z = Vec::new();
    let mut w = CMatrix::zeros(n, n);
    for i in 0..n {
        let ui = u.column(i).into_owned();
        let vi = v.column(i).into_owned();
        if sv[i] < rank_tol {
            a.push(vi);
            z.push(ui);
        } else {
            w += &vi * ui.adjoint() / C64::new(sv[i], 0.0);
        }
    }
    let singular_values = sv.clone();
    if a.is_empty() {
        return Err(Error::NoKernel {
            rank_tol,
            smallest: singular_values.last().copied().unwrap_or(0.0),
        });
    }
    let s = a.len();
    let a1 = averaged_matrix(spec);
    let delta = CMatrix::from_fn(s, s, |k, j| inner(&(&a1 * &a[j]), &z[k]));

    let dsv = linalg::singular_values(&delta);
    let (smax, smin) = (dsv[0], dsv[s - 1]);
    if smin <= DELTA_SINGULAR_TOL * smax.max(1.0) {
        return Err(Error::Degenerate { sigma_min: smin });
    }
    let delta_inv = delta.clone().try_inverse().ok_or(Error::Degenerate { sigma_min: smin })?;

    let algebraic_multiplicity = linalg::eigenvalues(&spec.a0)
        .iter()
        .filter(|l| l.norm() < rank_tol)
        .count();

    Ok(KernelData {
        s,
        a,
        z,
        delta,
        delta_inv,
        w,
        a1,
        rank_tol,
        singular_values,
        algebraic_multiplicity,
    })
}

/// Least-squares test for an adjoined vector: is `A0 x = -A1 Σ μ_j a_j`
/// solvable for some nonzero `μ`?
///
/// Works on the stacked system `[A0 | A1 a_1 … A1 a_s]` and asks whether its
/// numerical null space contains a vector with a nonzero `μ`-block. This
/// never forms `Δ` and serves as an independent check of the `Δ` test.
pub fn has_adjoined_vector(a0: &CMatrix, a1: &CMatrix, kernel: &[CVector], residual_tol: f64) -> bool {
    let n = a0.nrows();
    let s = kernel.len();
    let mut stacked = CMatrix::zeros(n, n + s);
    stacked.view_mut((0, 0), (n, n)).copy_from(a0);
    for (j, aj) in kernel.iter().enumerate() {
        stacked.set_column(n + j, &(a1 * aj));
    }
    // Full factorization: columns of `v` past the n-th span the forced
    // part of the null space.
    let svd = linalg::svd(&stacked);
    let scale = fnorm(&stacked).max(1.0);
    let null: Vec<usize> = (0..n + s)
        .filter(|&i| svd.s.get(i).is_none_or(|&sg| sg < residual_tol * scale))
        .collect();
    if null.is_empty() {
        return false;
    }
    // μ-block of the null-space basis; a nonzero block means some null
    // vector carries a nontrivial μ.
    let block = CMatrix::from_fn(s, null.len(), |k, c| svd.v[(n + k, null[c])]);
    linalg::op_norm(&block) > 1e-6
}
