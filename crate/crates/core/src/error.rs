use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid observation set: {0}")]
    InvalidObservation(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("weight normalization impossible: {0}")]
    Normalization(String),

    #[error("covariance matrix is not positive semi-definite ({0})")]
    NotPsd(String),

    #[error(
        "partition universe too large: k = {k}, limit is {limit} (Bell numbers grow too fast)"
    )]
    PartitionCapacity { k: usize, limit: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error(
        "argmax tie at site index {site} (within tolerance {tol:e}); resample or break manually"
    )]
    TieDetected { site: usize, tol: f64 },

    #[error("dimension {dim} over capacity {cap} for {what}")]
    DimensionCapacity {
        what: String,
        dim: usize,
        cap: usize,
    },

    #[error("operation unsupported for this model kind: {0}")]
    Unsupported(String),

    #[error("atom budget {budget} exhausted before the stopping rule was reached")]
    AtomBudget { budget: usize },

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("model specification: {0}")]
    Spec(String),
}
