use thiserror::Error;

/// Errors raised by the basins engine and its supporting modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller broke an API precondition (wrong dimension, index out of range, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Invalid configuration detected before any integration started.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The cell store or machine reached a state that should be impossible.
    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("automatic time step failed: {0}")]
    AutoDtFailed(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
