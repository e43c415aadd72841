use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (defect {defect:.3e} exceeds {allowed:.3e})")]
    NotHermitian { defect: f64, allowed: f64 },

    #[error("input outside the domain: {0}")]
    Domain(String),

    #[error("arity mismatch: expected {expected}, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("finite-difference stencil left the domain at step {step:.3e}: {reason}")]
    Step { step: f64, reason: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("sampling failed after {attempts} attempts: {reason}")]
    Sampling { attempts: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
