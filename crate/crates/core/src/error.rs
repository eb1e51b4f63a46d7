use thiserror::Error;

/// Errors raised across the analytic, simulation and verification layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("convergence failure in {what}: {diagnostics}")]
    Convergence { what: String, diagnostics: String },

    #[error("precision target {target:e} not met (achieved estimate {achieved:e})")]
    Precision { achieved: f64, target: f64 },

    #[error("step budget of {budget} steps exceeded")]
    Budget { budget: u64 },

    #[error("horizon too short: {0}")]
    HorizonTooShort(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("sample {failed_index} failed after {completed} of {requested} samples succeeded: {source}")]
    Partial {
        completed: usize,
        requested: usize,
        failed_index: u64,
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn unsupported(msg: impl Into<String>) -> Error {
    Error::Unsupported(msg.into())
}
