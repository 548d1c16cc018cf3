use thiserror::Error;

/// Errors raised by the library. Variants are grouped by the CLI exit code
/// they map to (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("lattice has {sites} sites, exceeding the size cap of {cap}")]
    Capacity { sites: u128, cap: usize },

    #[error("degenerate walk: the profile puts no mass on any nonzero lattice site")]
    DegenerateWalk,

    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),

    #[error("accuracy target not reached for {what}: achieved error estimate {achieved:e}")]
    Accuracy { what: String, achieved: f64 },

    #[error("insufficient resolution: {found} frequencies in the fit window, need at least {needed}")]
    InsufficientResolution { found: usize, needed: usize },

    #[error("empty window: {0}")]
    EmptyWindow(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the CLI: 1 for violated hypotheses, 2 for
    /// accuracy failures, 3 for bad configuration or input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegenerateWalk | Error::HypothesisViolation(_) => 1,
            Error::Accuracy { .. } | Error::InsufficientResolution { .. } => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
