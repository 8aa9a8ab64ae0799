use thiserror::Error;

/// Errors raised by the core routines.
#[derive(Debug, Error)]
pub enum FclsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("symmetric eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    EigenFailure { sweeps: usize, off_norm: f64 },

    #[error("solver did not converge after {iterations} iterations (KKT residual {kkt_residual:e})")]
    NonConvergence { iterations: usize, kkt_residual: f64 },

    #[error("restricted system is rank deficient (pivot {pivot} of {size})")]
    RankDeficient { pivot: usize, size: usize },

    #[error("LLA step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<FclsError>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, FclsError>;

pub(crate) fn invalid(msg: impl Into<String>) -> FclsError {
    FclsError::InvalidArgument(msg.into())
}
