//! Truncated formal power series in `ω⁻¹` with scalar or matrix
//! coefficients. Coefficient `q` multiplies `ω^{-q}`; nothing beyond the
//! truncation order is ever read or produced.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::linalg::{CMatrix, C64};
use crate::model::complex_serde;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarSeries {
    #[serde(with = "complex_serde::vec")]
    coeffs: Vec<C64>,
}

impl ScalarSeries {
    pub fn zero(trunc: usize) -> Self {
        ScalarSeries { coeffs: vec![C64::new(0.0, 0.0); trunc + 1] }
    }

    pub fn constant(v: C64, trunc: usize) -> Self {
        let mut s = Self::zero(trunc);
        s.coeffs[0] = v;
        s
    }

    /// Takes the first `trunc + 1` entries of `coeffs`, zero-padding.
    pub fn from_coeffs(coeffs: &[C64], trunc: usize) -> Self {
        let mut s = Self::zero(trunc);
        for (dst, src) in s.coeffs.iter_mut().zip(coeffs) {
            *dst = *src;
        }
        s
    }

    pub fn trunc(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, q: usize) -> C64 {
        self.coeffs.get(q).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    /// Re-truncates to a lower (or padded higher) order.
    pub fn truncate(&self, trunc: usize) -> Self {
        Self::from_coeffs(&self.coeffs, trunc)
    }

    pub fn scale(&self, k: C64) -> Self {
        ScalarSeries { coeffs: self.coeffs.iter().map(|v| v * k).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.coeffs.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// Value of the truncated polynomial at a given `ω`.
    pub fn eval(&self, omega: f64) -> C64 {
        let x = 1.0 / omega;
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, v| acc * x + v)
    }
}

fn common_trunc(a: usize, b: usize) -> usize {
    a.min(b)
}

impl Add for &ScalarSeries {
    type Output = ScalarSeries;
    fn add(self, rhs: &ScalarSeries) -> ScalarSeries {
        let n = common_trunc(self.trunc(), rhs.trunc());
        ScalarSeries { coeffs: (0..=n).map(|q| self.coeffs[q] + rhs.coeffs[q]).collect() }
    }
}

impl Sub for &ScalarSeries {
    type Output = ScalarSeries;
    fn sub(self, rhs: &ScalarSeries) -> ScalarSeries {
        let n = common_trunc(self.trunc(), rhs.trunc());
        ScalarSeries { coeffs: (0..=n).map(|q| self.coeffs[q] - rhs.coeffs[q]).collect() }
    }
}

impl Neg for &ScalarSeries {
    type Output = ScalarSeries;
    fn neg(self) -> ScalarSeries {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for &ScalarSeries {
    type Output = ScalarSeries;
    fn mul(self, rhs: &ScalarSeries) -> ScalarSeries {
        let n = common_trunc(self.trunc(), rhs.trunc());
        let coeffs = (0..=n)
            .map(|q| (0..=q).map(|i| self.coeffs[i] * rhs.coeffs[q - i]).sum())
            .collect();
        ScalarSeries { coeffs }
    }
}

/// Series with `n×n` matrix coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSeries {
    coeffs: Vec<CMatrix>,
}

impl MatrixSeries {
    pub fn zero(n: usize, trunc: usize) -> Self {
        MatrixSeries { coeffs: vec![CMatrix::zeros(n, n); trunc + 1] }
    }

    pub fn identity(n: usize, trunc: usize) -> Self {
        let mut s = Self::zero(n, trunc);
        s.coeffs[0] = CMatrix::identity(n, n);
        s
    }

    /// # Panics
    /// If `coeffs` is empty.
    pub fn from_coeffs(coeffs: Vec<CMatrix>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least the constant term");
        MatrixSeries { coeffs }
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn trunc(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[CMatrix] {
        &self.coeffs
    }

    pub fn coeff(&self, q: usize) -> &CMatrix {
        &self.coeffs[q]
    }

    pub fn trace(&self) -> ScalarSeries {
        ScalarSeries { coeffs: self.coeffs.iter().map(|m| m.trace()).collect() }
    }

    pub fn scale(&self, k: C64) -> Self {
        MatrixSeries { coeffs: self.coeffs.iter().map(|m| m * k).collect() }
    }

    /// `self + v·I`, order by order.
    pub fn add_scalar_identity(&self, v: &ScalarSeries) -> Self {
        let n = self.dim();
        let t = common_trunc(self.trunc(), v.trunc());
        let coeffs = (0..=t)
            .map(|q| &self.coeffs[q] + CMatrix::identity(n, n) * v.coeffs[q])
            .collect();
        MatrixSeries { coeffs }
    }

    pub fn max_imag(&self) -> f64 {
        self.coeffs.iter().map(crate::linalg::max_imag).fold(0.0, f64::max)
    }

    /// Value of the truncated matrix polynomial at a given `ω`.
    pub fn eval(&self, omega: f64) -> CMatrix {
        let x = C64::new(1.0 / omega, 0.0);
        let n = self.dim();
        self.coeffs.iter().rev().fold(CMatrix::zeros(n, n), |acc, m| acc * x + m)
    }
}

impl Add for &MatrixSeries {
    type Output = MatrixSeries;
    fn add(self, rhs: &MatrixSeries) -> MatrixSeries {
        let n = common_trunc(self.trunc(), rhs.trunc());
        MatrixSeries { coeffs: (0..=n).map(|q| &self.coeffs[q] + &rhs.coeffs[q]).collect() }
    }
}

impl Mul for &MatrixSeries {
    type Output = MatrixSeries;
    fn mul(self, rhs: &MatrixSeries) -> MatrixSeries {
        let t = common_trunc(self.trunc(), rhs.trunc());
        let n = self.dim();
        let coeffs = (0..=t)
            .map(|q| {
                let mut acc = CMatrix::zeros(n, n);
                for i in 0..=q {
                    acc += &self.coeffs[i] * &rhs.coeffs[q - i];
                }
                acc
            })
            .collect();
        MatrixSeries { coeffs }
    }
}
