//! Problem data model, trigonometric-polynomial arithmetic and the problem
//! document format.
//!
//! A problem document is a JSON object:
//!
//! ```json
//! {
//!   "n": 2, "m": 1, "real_mode": true,
//!   "A0": [[0, 0], [0, -1]],
//!   "B0": [[0, 0], [0, 0]],
//!   "B": { "1": [[[0, 0], [1, 0]], [[0, 0], [0, 0]]],
//!          "-1": [[[0, 0], [1, 0]], [[0, 0], [0, 0]]] },
//!   "d": { "0": [1, 0] }
//! }
//! ```
//!
//! Complex entries are `[re, im]` pairs; in real mode a bare number `x` is
//! read as `[x, 0]`. Absent harmonics are structural zeros.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, fnorm, vnorm, CMatrix, CVector, C64, I, ZERO};

/// Tolerance for the real-mode conjugate-symmetry checks.
pub const CONJUGACY_TOL: f64 = 1e-12;

/// The system `dx/dt = (A0 + B0/ω)x + Σ_{l≠0}(B_l x + d_l)e^{ilωt} + d_0`.
///
/// `ω` is not part of the problem; every consumer takes it as an argument.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub n: usize,
    pub m: usize,
    pub a0: CMatrix,
    pub b0: CMatrix,
    /// Oscillating coefficients keyed by nonzero harmonic `l ∈ [-m, m]`.
    pub b: BTreeMap<i64, CMatrix>,
    /// Forcing keyed by harmonic `l ∈ [-m, m]`, including `0`.
    pub d: BTreeMap<i64, CVector>,
    pub real_mode: bool,
    /// Seed a randomly generated problem was drawn from, if any.
    pub seed: Option<u64>,
    pub label: Option<String>,
}

impl ProblemSpec {
    /// Builds and validates a problem.
    pub fn new(
        a0: CMatrix,
        b0: CMatrix,
        b: BTreeMap<i64, CMatrix>,
        d: BTreeMap<i64, CVector>,
        m: usize,
        real_mode: bool,
    ) -> Result<Self> {
        let spec = ProblemSpec {
            n: a0.nrows(),
            m,
            a0,
            b0,
            b,
            d,
            real_mode,
            seed: None,
            label: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// An autonomous problem `dx/dt = (A0 + B0/ω)x + d_0`.
    pub fn autonomous(a0: CMatrix, b0: CMatrix, d0: Option<CVector>, real_mode: bool) -> Result<Self> {
        let mut d = BTreeMap::new();
        if let Some(d0) = d0 {
            d.insert(0, d0);
        }
        Self::new(a0, b0, BTreeMap::new(), d, 0, real_mode)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n == 0 {
            return Err(Error::Schema("n must be positive".into()));
        }
        let check_mat = |name: &str, a: &CMatrix| {
            if a.nrows() != n || a.ncols() != n {
                Err(Error::Schema(format!(
                    "{name} is {}x{}, expected {n}x{n}",
                    a.nrows(),
                    a.ncols()
                )))
            } else {
                Ok(())
            }
        };
        check_mat("A0", &self.a0)?;
        check_mat("B0", &self.b0)?;
        let m = self.m as i64;
        for (&l, bl) in &self.b {
            if l == 0 || l.abs() > m {
                return Err(Error::Schema(format!("B key {l} outside 1 <= |l| <= {m}")));
            }
            check_mat(&format!("B[{l}]"), bl)?;
        }
        for (&l, dl) in &self.d {
            if l.abs() > m {
                return Err(Error::Schema(format!("d key {l} outside |l| <= {m}")));
            }
            if dl.len() != n {
                return Err(Error::Schema(format!("d[{l}] has length {}, expected {n}", dl.len())));
            }
        }
        if self.real_mode {
            self.check_real()?;
        }
        Ok(())
    }

    fn check_real(&self) -> Result<()> {
        let imag_a = |a: &CMatrix| a.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        if imag_a(&self.a0) > CONJUGACY_TOL {
            return Err(Error::Conjugacy("A0 has a nonzero imaginary part".into()));
        }
        if imag_a(&self.b0) > CONJUGACY_TOL {
            return Err(Error::Conjugacy("B0 has a nonzero imaginary part".into()));
        }
        if let Some(d0) = self.d.get(&0) {
            if d0.iter().any(|v| v.im.abs() > CONJUGACY_TOL) {
                return Err(Error::Conjugacy("d[0] has a nonzero imaginary part".into()));
            }
        }
        let zm = CMatrix::zeros(self.n, self.n);
        let zv = CVector::zeros(self.n);
        for l in 1..=self.m as i64 {
            let bp = self.b.get(&l).unwrap_or(&zm);
            let bm = self.b.get(&-l).unwrap_or(&zm);
            let defect = bp.iter().zip(bm.iter()).map(|(p, q)| (p.conj() - q).norm()).fold(0.0, f64::max);
            if defect > CONJUGACY_TOL {
                return Err(Error::Conjugacy(format!("B[{}] != conj(B[{l}]) (defect {defect:e})", -l)));
            }
            let dp = self.d.get(&l).unwrap_or(&zv);
            let dm = self.d.get(&-l).unwrap_or(&zv);
            let defect = dp.iter().zip(dm.iter()).map(|(p, q)| (p.conj() - q).norm()).fold(0.0, f64::max);
            if defect > CONJUGACY_TOL {
                return Err(Error::Conjugacy(format!("d[{}] != conj(d[{l}]) (defect {defect:e})", -l)));
            }
        }
        Ok(())
    }

    pub fn b_l(&self, l: i64) -> Option<&CMatrix> {
        self.b.get(&l)
    }

    pub fn d0(&self) -> CVector {
        self.d.get(&0).cloned().unwrap_or_else(|| CVector::zeros(self.n))
    }

    /// True when every forcing vector vanishes.
    pub fn is_homogeneous(&self) -> bool {
        self.d.values().all(|v| v.iter().all(|x| *x == ZERO))
    }

    /// Oscillating forcing `d_l`, `l ≠ 0`, as a zero-mean trigonometric polynomial.
    pub fn oscillating_forcing(&self) -> TrigVectorPoly {
        let mut p = TrigVectorPoly::zero(self.n);
        for (&l, dl) in &self.d {
            if l != 0 {
                p.add_term(l, dl);
            }
        }
        p
    }

    /// Oscillating coefficient `Σ_{l≠0} B_l e^{ilτ}`.
    pub fn oscillating_matrix(&self) -> TrigMatrixPoly {
        let mut p = TrigMatrixPoly::zero(self.n);
        for (&l, bl) in &self.b {
            p.add_term(l, bl);
        }
        p
    }

    /// `A(t) = A0 + B0/ω + Σ B_l e^{ilωt}`.
    pub fn coefficient_at(&self, omega: f64, t: f64) -> CMatrix {
        let mut a = &self.a0 + &self.b0 / c(omega, 0.0);
        for (&l, bl) in &self.b {
            a += bl * C64::from_polar(1.0, l as f64 * omega * t);
        }
        a
    }

    /// `g(t) = Σ_l d_l e^{ilωt}` (including `d_0`).
    pub fn forcing_at(&self, omega: f64, t: f64) -> CVector {
        let mut g = CVector::zeros(self.n);
        for (&l, dl) in &self.d {
            g += dl * C64::from_polar(1.0, l as f64 * omega * t);
        }
        g
    }

    /// Right-hand side of the system at `(t, x)`.
    pub fn vector_field(&self, omega: f64, t: f64, x: &CVector) -> CVector {
        self.coefficient_at(omega, t) * x + self.forcing_at(omega, t)
    }

    /// Largest Frobenius / Euclidean norm among all coefficients.
    pub fn max_coefficient_norm(&self) -> f64 {
        let mut p = fnorm(&self.a0).max(fnorm(&self.b0));
        for bl in self.b.values() {
            p = p.max(fnorm(bl));
        }
        for dl in self.d.values() {
            p = p.max(vnorm(dl));
        }
        p
    }
}

// ---------------------------------------------------------------------------
// Trigonometric polynomials
// ---------------------------------------------------------------------------

/// Zero-mean vector trigonometric polynomial `Σ_{l≠0} c_l e^{ilτ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigVectorPoly {
    pub n: usize,
    coeffs: BTreeMap<i64, CVector>,
}

impl TrigVectorPoly {
    pub fn zero(n: usize) -> Self {
        TrigVectorPoly { n, coeffs: BTreeMap::new() }
    }

    /// Builds a polynomial from a coefficient map; the `l = 0` entry, if
    /// any, is dropped.
    pub fn from_map(n: usize, mut coeffs: BTreeMap<i64, CVector>) -> Self {
        coeffs.remove(&0);
        TrigVectorPoly { n, coeffs }
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, CVector> {
        &self.coeffs
    }

    pub fn coeff(&self, l: i64) -> Option<&CVector> {
        self.coeffs.get(&l)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|v| v.iter().all(|x| *x == ZERO))
    }

    /// Adds `v e^{ilτ}`.
    ///
    /// # Panics
    /// If `l == 0`.
    pub fn add_term(&mut self, l: i64, v: &CVector) {
        assert!(l != 0, "zero-mean trigonometric polynomial cannot carry an l = 0 term");
        self.coeffs
            .entry(l)
            .and_modify(|e| *e += v)
            .or_insert_with(|| v.clone());
    }

    pub fn add(&mut self, other: &TrigVectorPoly) {
        for (&l, v) in &other.coeffs {
            self.add_term(l, v);
        }
    }

    /// Largest `|l|` with a stored coefficient (0 if empty).
    pub fn max_harmonic(&self) -> u64 {
        self.coeffs.keys().map(|l| l.unsigned_abs()).max().unwrap_or(0)
    }

    /// `Σ_l c_l e^{ilτ}`.
    pub fn eval(&self, tau: f64) -> CVector {
        let mut out = CVector::zeros(self.n);
        for (&l, v) in &self.coeffs {
            out += v * C64::from_polar(1.0, l as f64 * tau);
        }
        out
    }

    /// Derivative with respect to `τ`.
    pub fn derivative(&self) -> TrigVectorPoly {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(&l, v)| (l, v * (I * l as f64)))
            .collect();
        TrigVectorPoly { n: self.n, coeffs }
    }

    /// The zero-mean primitive: `c_l ↦ c_l / (il)`.
    pub fn antiderivative(&self) -> TrigVectorPoly {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(&l, v)| (l, v / (I * l as f64)))
            .collect();
        TrigVectorPoly { n: self.n, coeffs }
    }

    /// `Σ_l |c_l|`, an upper bound for the sup norm.
    pub fn coefficient_l1(&self) -> f64 {
        self.coeffs.values().map(vnorm).sum()
    }

    /// Applies a constant matrix on the left.
    pub fn left_mul(&self, a: &CMatrix) -> TrigVectorPoly {
        let coeffs = self.coeffs.iter().map(|(&l, v)| (l, a * v)).collect();
        TrigVectorPoly { n: self.n, coeffs }
    }
}

/// Matrix trigonometric polynomial `Σ_l C_l e^{ilτ}` (mean term allowed).
#[derive(Debug, Clone, PartialEq)]
pub struct TrigMatrixPoly {
    pub n: usize,
    coeffs: BTreeMap<i64, CMatrix>,
}

impl TrigMatrixPoly {
    pub fn zero(n: usize) -> Self {
        TrigMatrixPoly { n, coeffs: BTreeMap::new() }
    }

    pub fn constant(a: &CMatrix) -> Self {
        let mut p = Self::zero(a.nrows());
        p.add_term(0, a);
        p
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, CMatrix> {
        &self.coeffs
    }

    pub fn add_term(&mut self, l: i64, a: &CMatrix) {
        self.coeffs
            .entry(l)
            .and_modify(|e| *e += a)
            .or_insert_with(|| a.clone());
    }

    pub fn add(&mut self, other: &TrigMatrixPoly) {
        for (&l, a) in &other.coeffs {
            self.add_term(l, a);
        }
    }

    pub fn sub(&mut self, other: &TrigMatrixPoly) {
        for (&l, a) in &other.coeffs {
            self.add_term(l, &-a);
        }
    }

    /// The `l = 0` coefficient.
    pub fn mean(&self) -> CMatrix {
        self.coeffs.get(&0).cloned().unwrap_or_else(|| CMatrix::zeros(self.n, self.n))
    }

    /// Everything except the mean.
    pub fn oscillating(&self) -> TrigMatrixPoly {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(&l, _)| l != 0)
            .map(|(&l, a)| (l, a.clone()))
            .collect();
        TrigMatrixPoly { n: self.n, coeffs }
    }

    pub fn max_harmonic(&self) -> u64 {
        self.coeffs.keys().map(|l| l.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn eval(&self, tau: f64) -> CMatrix {
        let mut out = CMatrix::zeros(self.n, self.n);
        for (&l, a) in &self.coeffs {
            out += a * C64::from_polar(1.0, l as f64 * tau);
        }
        out
    }

    pub fn derivative(&self) -> TrigMatrixPoly {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(&l, _)| l != 0)
            .map(|(&l, a)| (l, a * (I * l as f64)))
            .collect();
        TrigMatrixPoly { n: self.n, coeffs }
    }

    /// Zero-mean primitive of the oscillating part.
    ///
    /// # Panics
    /// If the mean is nonzero.
    pub fn antiderivative(&self) -> TrigMatrixPoly {
        if let Some(a0) = self.coeffs.get(&0) {
            assert!(a0.iter().all(|v| *v == ZERO), "antiderivative of a polynomial with nonzero mean");
        }
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(&l, _)| l != 0)
            .map(|(&l, a)| (l, a / (I * l as f64)))
            .collect();
        TrigMatrixPoly { n: self.n, coeffs }
    }

    /// Pointwise product `self(τ)·other(τ)`.
    pub fn mul(&self, other: &TrigMatrixPoly) -> TrigMatrixPoly {
        let mut out = TrigMatrixPoly::zero(self.n);
        for (&l1, a) in &self.coeffs {
            for (&l2, b) in &other.coeffs {
                out.add_term(l1 + l2, &(a * b));
            }
        }
        out
    }

    pub fn left_mul(&self, a: &CMatrix) -> TrigMatrixPoly {
        let coeffs = self.coeffs.iter().map(|(&l, m)| (l, a * m)).collect();
        TrigMatrixPoly { n: self.n, coeffs }
    }

    pub fn right_mul(&self, a: &CMatrix) -> TrigMatrixPoly {
        let coeffs = self.coeffs.iter().map(|(&l, m)| (l, m * a)).collect();
        TrigMatrixPoly { n: self.n, coeffs }
    }

    pub fn max_imag(&self) -> f64 {
        // Imaginary part of the evaluated function, bounded via conjugate pairs.
        let zero = CMatrix::zeros(self.n, self.n);
        let mut worst = self.mean().iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        for (&l, a) in self.coeffs.iter().filter(|(&l, _)| l > 0) {
            let b = self.coeffs.get(&-l).unwrap_or(&zero);
            let d = a.iter().zip(b.iter()).map(|(p, q)| (p.conj() - q).norm()).fold(0.0, f64::max);
            worst = worst.max(d);
        }
        for (&l, b) in self.coeffs.iter().filter(|(&l, _)| l < 0) {
            if !self.coeffs.contains_key(&-l) {
                worst = worst.max(b.iter().map(|v| v.norm()).fold(0.0, f64::max));
            }
        }
        worst
    }
}

/// Mean of a `2π`-periodic vector function by the trapezoidal rule on
/// `samples` points (exact for trigonometric polynomials of degree below
/// `samples`).
pub fn quadrature_mean(n: usize, samples: usize, f: impl Fn(f64) -> CVector) -> CVector {
    let mut acc = CVector::zeros(n);
    for i in 0..samples {
        acc += f(TAU * i as f64 / samples as f64);
    }
    acc / c(samples as f64, 0.0)
}

// ---------------------------------------------------------------------------
// Document format
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
enum Entry {
    Pair([f64; 2]),
    Real(f64),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemDocument {
    n: usize,
    m: usize,
    #[serde(default)]
    real_mode: bool,
    #[serde(rename = "A0")]
    a0: Vec<Vec<Entry>>,
    #[serde(rename = "B0")]
    b0: Vec<Vec<Entry>>,
    #[serde(rename = "B", default)]
    b: BTreeMap<String, Vec<Vec<Entry>>>,
    #[serde(default)]
    d: BTreeMap<String, Vec<Entry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

fn entry_value(e: Entry, real_mode: bool, what: &str) -> Result<C64> {
    match e {
        Entry::Pair([re, im]) => Ok(c(re, im)),
        Entry::Real(x) if real_mode => Ok(c(x, 0.0)),
        Entry::Real(_) => Err(Error::Schema(format!(
            "{what}: bare numbers are only accepted in real_mode; use [re, im]"
        ))),
    }
}

fn read_matrix(rows: &[Vec<Entry>], n: usize, real_mode: bool, what: &str) -> Result<CMatrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Schema(format!("{what} must be {n}x{n}")));
    }
    let mut a = CMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (j, &e) in row.iter().enumerate() {
            a[(i, j)] = entry_value(e, real_mode, what)?;
        }
    }
    Ok(a)
}

fn read_vector(v: &[Entry], n: usize, real_mode: bool, what: &str) -> Result<CVector> {
    if v.len() != n {
        return Err(Error::Schema(format!("{what} must have length {n}")));
    }
    let vals = v
        .iter()
        .map(|&e| entry_value(e, real_mode, what))
        .collect::<Result<Vec<_>>>()?;
    Ok(CVector::from_vec(vals))
}

fn parse_key(k: &str, what: &str) -> Result<i64> {
    k.trim()
        .parse::<i64>()
        .map_err(|_| Error::Schema(format!("{what} key {k:?} is not a signed integer")))
}

/// Parses a problem document.
pub fn parse_problem(text: &str) -> Result<ProblemSpec> {
    let doc: ProblemDocument = serde_json::from_str(text)?;
    let n = doc.n;
    if n == 0 {
        return Err(Error::Schema("n must be positive".into()));
    }
    let rm = doc.real_mode;
    let a0 = read_matrix(&doc.a0, n, rm, "A0")?;
    let b0 = read_matrix(&doc.b0, n, rm, "B0")?;
    let mut b = BTreeMap::new();
    for (k, rows) in &doc.b {
        let l = parse_key(k, "B")?;
        if b.insert(l, read_matrix(rows, n, rm, &format!("B[{l}]"))?).is_some() {
            return Err(Error::Schema(format!("duplicate B key {l}")));
        }
    }
    let mut d = BTreeMap::new();
    for (k, v) in &doc.d {
        let l = parse_key(k, "d")?;
        if d.insert(l, read_vector(v, n, rm, &format!("d[{l}]"))?).is_some() {
            return Err(Error::Schema(format!("duplicate d key {l}")));
        }
    }
    let spec = ProblemSpec {
        n,
        m: doc.m,
        a0,
        b0,
        b,
        d,
        real_mode: rm,
        seed: doc.seed,
        label: doc.label,
    };
    spec.validate()?;
    Ok(spec)
}

fn write_matrix(a: &CMatrix) -> Vec<Vec<Entry>> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| Entry::Pair([a[(i, j)].re, a[(i, j)].im])).collect())
        .collect()
}

fn write_vector(v: &CVector) -> Vec<Entry> {
    v.iter().map(|x| Entry::Pair([x.re, x.im])).collect()
}

/// Canonical serialization: every entry as a `[re, im]` pair.
pub fn serialize_problem(spec: &ProblemSpec) -> String {
    let doc = ProblemDocument {
        n: spec.n,
        m: spec.m,
        real_mode: spec.real_mode,
        a0: write_matrix(&spec.a0),
        b0: write_matrix(&spec.b0),
        b: spec.b.iter().map(|(l, a)| (l.to_string(), write_matrix(a))).collect(),
        d: spec.d.iter().map(|(l, v)| (l.to_string(), write_vector(v))).collect(),
        seed: spec.seed,
        label: spec.label.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("problem document serializes")
}

pub fn read_problem_file(path: &std::path::Path) -> Result<ProblemSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_problem(&text)
}

/// Serde adapter writing complex numbers as `[re, im]`.
pub mod complex_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<C64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(c(re, im))
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
            v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<C64>, D::Error> {
            let v = Vec::<[f64; 2]>::deserialize(d)?;
            Ok(v.into_iter().map(|[re, im]| c(re, im)).collect())
        }
    }
}
