use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    /// A relative-error target is undefined (zero diagonal entry or all-zero diagonal).
    #[error("degenerate target: {0}")]
    DegenerateTarget(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("matrix market parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported shape: {rows}x{cols} (only square matrices are supported)")]
    UnsupportedShape { rows: usize, cols: usize },

    #[error("unsupported field: {0}")]
    UnsupportedField(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}
