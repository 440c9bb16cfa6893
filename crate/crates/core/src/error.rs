use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("axis {axis} out of range for a field of rank {rank}")]
    AxisOutOfRange { axis: usize, rank: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("derivative order {order} exceeds the configured maximum {max}")]
    OrderTooHigh { order: usize, max: usize },

    #[error("value out of representable range: {0}")]
    Overflow(String),

    #[error("window is identically zero")]
    ZeroWindow,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("inadmissible quantization pair (r = {r}, t = {t})")]
    InadmissiblePair { r: f64, t: f64 },

    #[error("boundary contamination: {0}")]
    BoundaryContamination(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed field file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
}

/// Coarse classification used by the command-line exit-code contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Numeric,
    Usage,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. } | Error::Format { .. } => ErrorClass::Io,
            Error::UnknownSuite(_) | Error::InvalidParameter(_) | Error::InadmissiblePair { .. } => {
                ErrorClass::Usage
            }
            _ => ErrorClass::Numeric,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
