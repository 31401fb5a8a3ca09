//! Crate-wide error type and result alias.

use std::path::PathBuf;
use thiserror::Error;

/// Errors surfaced by the tokenizer pipeline and its tools.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a precondition (shape mismatch, empty input, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration value is out of its documented range.
    #[error("configuration error: {0}")]
    Config(String),

    /// A binary file did not match its format contract.
    #[error("format error at byte {offset}: {msg}")]
    Format { msg: String, offset: u64 },

    /// Filesystem failure, annotated with the offending path.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// The verification suite found a failing property.
    #[error("verification failed: {0}")]
    Verification(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>, offset: u64) -> Self {
        Error::Format {
            msg: msg.into(),
            offset,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code associated with this error class.
    ///
    /// 1 = invalid input, 2 = format error, 3 = verification failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Config(_) | Error::Io { .. } => 1,
            Error::Format { .. } => 2,
            Error::Verification(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
