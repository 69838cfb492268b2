use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the estimation pipeline and its building blocks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("degenerate density: {0}")]
    DegenerateDensity(String),

    #[error("degenerate denominator: {0}")]
    DegenerateDenominator(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:.3e})")]
    IterationLimit { iterations: usize, residual: f64 },

    #[error("{failed} of {total} replications failed")]
    TooManyFailures { failed: usize, total: usize },

    #[error("parse error in {source_name}: {message}")]
    Parse { source_name: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(source_name: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            message: message.into(),
        }
    }
}
