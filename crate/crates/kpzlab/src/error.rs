use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("size cap exceeded: {what} = {got} > {cap}")]
    SizeCap {
        what: &'static str,
        got: usize,
        cap: usize,
    },

    #[error("numerical instability: {0}")]
    Instability(String),

    #[error("rejection retry cap {cap} exhausted (mean acceptance weight {mean_weight:.3e})")]
    RetryCapExhausted { cap: u64, mean_weight: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("profile coverage too small: need half-width >= {required:.4}, have {available:.4}")]
    InsufficientCoverage { required: f64, available: f64 },

    #[error("quadrature did not converge: estimated error {est_error:.3e} above tolerance {tol:.3e}")]
    QuadratureNotConverged { est_error: f64, tol: f64 },

    #[error("boundary ordering violated: {0}")]
    OrderingViolation(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
