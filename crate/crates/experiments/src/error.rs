use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = ExpError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ExpError {
    #[error(transparent)]
    Core(#[from] erl_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed JSON: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    /// A field failed schema or validation checks; `pointer` is an RFC 6901 JSON pointer.
    #[error("{pointer}: {message}")]
    Schema { pointer: String, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown builtin MDP '{0}' (expected tristate, return-demo or mean-tie)")]
    UnknownBuiltin(String),

    #[error("builtin '{name}' failed self-certification: {reason}")]
    Certification { name: &'static str, reason: String },
}

impl ExpError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ExpError::Io { path: path.into(), source }
    }

    pub(crate) fn schema(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        ExpError::Schema { pointer: pointer.into(), message: message.into() }
    }
}
