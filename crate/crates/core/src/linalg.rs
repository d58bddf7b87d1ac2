//! Small complex linear-algebra helpers shared by the other modules.

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = Complex { re: 0.0, im: 0.0 };
pub const ONE: C64 = Complex { re: 1.0, im: 0.0 };
pub const I: C64 = Complex { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// `(x, y) = Σ x_i conj(y_i)`.
pub fn inner(x: &CVector, y: &CVector) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b.conj()).sum()
}

/// Euclidean norm.
pub fn vnorm(x: &CVector) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Frobenius norm.
pub fn fnorm(a: &CMatrix) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest absolute entry.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Maximum absolute row sum.
pub fn inf_norm(a: &CMatrix) -> f64 {
    (0..a.nrows())
        .map(|i| a.row(i).iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Full singular-value factorization `a = u·diag(s)·v^H`, singular values
/// descending. `u` is `rows×rows` and `v` is `cols×cols`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

fn to_faer(a: &CMatrix) -> faer::Mat<C64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(a: faer::MatRef<'_, C64>) -> CMatrix {
    CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// # Panics
/// If the iteration fails to converge, which faer reports only for
/// non-finite input.
pub fn svd(a: &CMatrix) -> Svd {
    let f = to_faer(a).svd().expect("SVD of a finite matrix converges");
    let k = a.nrows().min(a.ncols());
    let s = (0..k).map(|i| f.S()[i].re).collect();
    Svd { u: from_faer(f.U()), s, v: from_faer(f.V()) }
}

/// Singular values in descending order.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    to_faer(a).singular_values().expect("SVD of a finite matrix converges")
}

/// Spectral (operator 2-) norm.
pub fn op_norm(a: &CMatrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn smallest_singular_value(a: &CMatrix) -> f64 {
    singular_values(a).last().copied().unwrap_or(0.0)
}

pub fn zeros(n: usize) -> CMatrix {
    CMatrix::zeros(n, n)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn real_matrix(rows: &[&[f64]]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(n, m, |i, j| c(rows[i][j], 0.0))
}

pub fn real_vector(v: &[f64]) -> CVector {
    CVector::from_iterator(v.len(), v.iter().map(|&x| c(x, 0.0)))
}

/// Largest imaginary part magnitude among the entries.
pub fn max_imag(a: &CMatrix) -> f64 {
    a.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
}

/// Eigenvalues of a general complex matrix.
pub fn eigenvalues(a: &CMatrix) -> Vec<C64> {
    if a.is_empty() {
        return Vec::new();
    }
    to_faer(a).eigenvalues().expect("eigenvalues of a finite matrix converge")
}

/// Solves `a x = b`, returning `None` when LU detects exact singularity.
pub fn solve(a: &CMatrix, b: &CVector) -> Option<CVector> {
    a.clone().lu().solve(b)
}
