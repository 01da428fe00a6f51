use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
///
/// The variants split into validation failures (bad input, bad arguments,
/// malformed files or configs) and runtime failures (numerical domain
/// problems, I/O). [`Error::is_validation`] tells them apart for exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid argument `{name}`: {msg}")]
    Argument { name: &'static str, msg: String },

    #[error("domain error: {msg}")]
    Domain { msg: String, value: Option<f64> },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("config error in field `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn arg(name: &'static str, msg: impl Into<String>) -> Self {
        Error::Argument {
            name,
            msg: msg.into(),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain {
            msg: msg.into(),
            value: None,
        }
    }

    pub(crate) fn domain_with(msg: impl Into<String>, value: f64) -> Self {
        Error::Domain {
            msg: msg.into(),
            value: Some(value),
        }
    }

    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            msg: msg.into(),
        }
    }

    /// True for errors caused by the caller's input rather than the computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::Argument { .. }
                | Error::Format { .. }
                | Error::Config { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
