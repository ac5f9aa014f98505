use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no grammar available for {0}")]
    Grammar(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("missing stage input: {0}")]
    MissingStageInput(String),

    #[error("stage input changed since it was produced: {0}")]
    StaleInput(String),

    #[error("run directory is locked by another process ({0})")]
    Locked(PathBuf),

    #[error("endpoint error: {0}")]
    Endpoint(String),

    #[error("{failed} of {total} requests failed, above the {limit:.0}% abort threshold (first: {first})")]
    TooManyFailures {
        failed: usize,
        total: usize,
        limit: f64,
        first: String,
    },

    #[error("malformed record at {path}:{line}: {message}")]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Config(_) => "config",
            Error::Grammar(_) => "grammar",
            Error::InvalidInput(_) => "invalid_input",
            Error::MissingStageInput(_) => "missing_stage_input",
            Error::StaleInput(_) => "stale_input",
            Error::Locked(_) => "locked",
            Error::Endpoint(_) => "endpoint",
            Error::TooManyFailures { .. } => "too_many_failures",
            Error::Record { .. } => "record",
            Error::Json(_) => "json",
        }
    }
}
