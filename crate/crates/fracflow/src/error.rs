//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry: {0}")]
    Geometry(String),

    #[error("config: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("time grid mismatch: {0}")]
    GridMismatch(String),

    #[error("singular pivot at row {0}")]
    SingularPivot(usize),

    #[error("nonpositive pivot at row {0}: matrix is not positive definite")]
    NonPositivePivot(usize),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("divergence detected: {0}")]
    Divergence(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the CLI: 2 for configuration problems,
    /// 3 for solver non-convergence, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Geometry(_) | Error::Invalid(_) => 2,
            Error::NoConvergence(_) | Error::Divergence(_) => 3,
            _ => 1,
        }
    }
}
