use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed or inconsistent input (non-finite values, wrong lengths, bad hyperparameters).
    #[error("invalid input: {0}")]
    Input(String),

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    /// A matrix expected to be positive definite failed to factor.
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    /// Training produced a non-finite loss or gradient.
    #[error("training diverged: {0}")]
    Diverged(String),

    #[error(transparent)]
    Parse(#[from] crate::data::ParseError),

    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
