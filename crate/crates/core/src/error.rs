use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// The CLI maps [`Error::Validation`] to exit code 2 and
/// [`Error::Numerical`] to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// True for errors caused by bad input rather than failed numerics or I/O.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Validation(_) | Error::Config { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
