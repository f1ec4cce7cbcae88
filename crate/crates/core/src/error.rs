use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("{what} = {value} outside the valid range [{min}, {max}]")]
    OutOfRange {
        what: String,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("requested {requested} bound levels but only {found} were found")]
    LevelShortfall { requested: usize, found: usize },

    #[error("reduced density matrix is not Hermitian (deviation {0:.3e})")]
    NonHermitian(f64),

    #[error("density matrix trace {0} differs from 1")]
    TraceViolation(f64),

    #[error("negative eigenvalue {0:.3e} in reduced density matrix")]
    NegativeEigenvalue(f64),

    #[error("coefficient residual {residual:.3e} on channel {channel} exceeds {limit:.1e}")]
    ResidualTooLarge { channel: usize, residual: f64, limit: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("norm drift {drift:.3e} at t = {time:.6e} a.u. exceeds {limit:.1e}")]
    NormDrift { drift: f64, time: f64, limit: f64 },

    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("in segment {segment}: {source}")]
    Segment {
        segment: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Error class used for process exit codes: validation, numerical, or I/O.
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config { .. } | Error::InvalidInput(_) | Error::NonFinite(_) => ErrorClass::Validation,
            Error::Io { .. } => ErrorClass::Io,
            Error::Segment { source, .. } => source.class(),
            _ => ErrorClass::Runtime,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Runtime,
    Io,
}
