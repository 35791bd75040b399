use std::path::PathBuf;

use thiserror::Error;

/// Errors produced across the library.
#[derive(Debug, Error)]
pub enum IcrError {
    /// A model or innovation parameter lies outside its admissible domain.
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    /// An operation was asked to work outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The regression design is numerically rank deficient.
    #[error("singular design: {0}")]
    SingularDesign(String),

    /// The sandwich variance collapsed to (numerically) zero.
    #[error("degenerate variance estimate ({0:e})")]
    DegenerateVariance(f64),

    /// A caller-supplied argument is malformed.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A scenario configuration key is missing or invalid.
    #[error("config error at key `{key}`: {msg}")]
    Config { key: String, msg: String },

    /// A data file could not be parsed.
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: u64, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl IcrError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IcrError::Io { path: path.into(), source }
    }

    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        IcrError::Config { key: key.into(), msg: msg.into() }
    }
}

pub type Result<T> = std::result::Result<T, IcrError>;
