use maxcond_core::CoreError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, KernelError>;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("observation is not attainable under the model (all hitting-scenario weights vanish)")]
    InconsistentObservation,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("rejection acceptance rate {estimate:.3e} below floor {floor:.3e}; review the conditioning constraints")]
    AcceptanceTooLow { estimate: f64, floor: f64 },

    #[error(
        "requested accuracy {requested:.3e} unreachable within budget; achieved {achieved:.3e}"
    )]
    AccuracyNotReached { requested: f64, achieved: f64 },

    #[error("invalid query: {0}")]
    InvalidQuery(String),
}
