use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of the operation (zero vector,
    /// coincident points, non-finite value, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value violates an invariant, or the file could not be parsed.
    #[error("configuration error: {0}")]
    Config(String),

    /// The filter could not complete a step (singular innovation, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A scenario aborted part-way through; carries the epoch that failed.
    #[error("scenario aborted at epoch {epoch} (t = {time} s): {source}")]
    Aborted {
        epoch: usize,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    /// Malformed ephemeris data; `row` is the 1-based data row (header excluded).
    #[error("ephemeris {path}: row {row}: {msg}")]
    Ephemeris {
        path: PathBuf,
        row: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when this error (or the error that aborted a scenario) is numerical.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Numerical(_) => true,
            Error::Aborted { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
