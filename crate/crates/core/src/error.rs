use thiserror::Error;

/// Errors produced by the fitting, detection, inference and prediction routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("design matrix is rank deficient; dependent columns: {columns:?}")]
    Singular { columns: Vec<String> },

    #[error("fisher information is singular along direction {direction:?}")]
    SingularFisher { direction: Vec<f64> },

    #[error("fit did not converge: {0}")]
    NonConvergence(String),

    #[error("separation detection failed: {0}")]
    DetectionFailed(String),

    #[error("linear program error: {0}")]
    Lp(String),

    #[error("{0}")]
    Precondition(String),

    #[error("prediction failed for both augmented fits: y=0: {fit0}; y=1: {fit1}")]
    AugmentedFits { fit0: String, fit1: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
