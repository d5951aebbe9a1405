use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the function's domain (poles, windows, degree caps).
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid parameters for a system, map or experiment.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A numerical self-check failed its declared tolerance.
    #[error("tolerance breach in {what}: measured {measured:.3e} > allowed {allowed:.3e}")]
    Tolerance {
        what: String,
        measured: f64,
        allowed: f64,
    },

    /// An iterative method did not converge.
    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("zero eigenvalue with nonzero coefficient at mode {0}")]
    ZeroMode(usize),

    #[error("unknown identifier: {0}")]
    Unknown(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
