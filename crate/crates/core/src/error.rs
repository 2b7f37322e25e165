use thiserror::Error;

/// Errors produced by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("parameter out of range: {0}")]
    InvalidParameter(String),

    #[error("empty set")]
    EmptySet,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unbounded halfspace system")]
    Unbounded,

    #[error("volume mismatch: |A| = {a}, |B| = {b}")]
    VolumeMismatch { a: f64, b: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("solver did not converge: {message} (best residual {residual:e})")]
    NonConvergence { message: String, residual: f64 },

    #[error("problem exceeds solver budget: {0}")]
    BudgetExceeded(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
