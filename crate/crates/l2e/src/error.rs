//! Crate-wide error type. Variants follow the failure taxonomy used across
//! the public API: configuration, shape, data, numerical, state, and format
//! errors, plus IO/JSON passthrough.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration value (dimension 0, percentile out of range, ...).
    #[error("config error: {0}")]
    Config(String),

    /// Incompatible array shapes between inputs or against a model.
    #[error("shape error: {0}")]
    Shape(String),

    /// Structurally valid input with inadmissible content (label out of
    /// range, empty batch, distribution that does not sum to one, ...).
    #[error("data error: {0}")]
    Data(String),

    /// A computation produced a non-finite or impossible value.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// An operation was called before its preconditions were established
    /// (for example training on a pair whose labels are not yet resolved).
    #[error("state error: {0}")]
    State(String),

    /// Malformed file content, with position information where available.
    #[error("parse error: {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// A file whose overall structure does not match the expected format.
    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
    pub fn state(msg: impl Into<String>) -> Self {
        Error::State(msg.into())
    }
    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
