use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("conjugate symmetry violated: {0}")]
    Conjugacy(String),

    #[error("A0 has no singular value below rank_tol = {rank_tol:e} (smallest is {smallest:e}); the problem is not critical")]
    NoKernel { rank_tol: f64, smallest: f64 },

    #[error("solvability matrix Delta is singular (smallest singular value {sigma_min:e}): a kernel vector of A0 has an adjoined vector with respect to A0, A1")]
    Degenerate { sigma_min: f64 },

    #[error("formal averaging requires a real system (real_mode = true)")]
    NotReal,

    #[error("integrator step size underflow at t = {t}")]
    StepFailure { t: f64 },

    #[error("I - monodromy is numerically singular at omega = {omega} (smallest singular value {sigma_min:e}); no unique periodic solution")]
    NonUnique { omega: f64, sigma_min: f64 },

    #[error("Floquet multiplier of modulus {modulus} lies on the unit circle with suspected defective structure")]
    BoundaryUndecidable { modulus: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Schema(e.to_string())
    }
}
