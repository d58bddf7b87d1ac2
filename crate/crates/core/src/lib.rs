//! Periodic solutions of linear ODE systems with rapidly oscillating
//! coefficients in the critical case.
//!
//! The system under study is
//!
//! ```text
//! dx/dt = (A0 + B0/ω) x + Σ_{1≤|l|≤m} (B_l x + d_l) e^{ilωt} + d_0
//! ```
//!
//! where `A0` has a (possibly multiple) semisimple zero eigenvalue. The crate
//! builds the full asymptotic expansion of the unique `2π/ω`-periodic
//! solution in powers of `1/ω`, checks the growth estimates that make the
//! series converge, derives the formal averaged system and its Hurwitz
//! determinant series for a stability verdict, and cross-checks everything
//! against a monodromy-matrix oracle.

pub mod averaging;
pub mod bounds;
pub mod cli;
pub mod error;
pub mod expansion;
pub mod fixtures;
pub mod integrator;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod series;
pub mod spectral;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
pub use model::{ProblemSpec, TrigMatrixPoly, TrigVectorPoly};
