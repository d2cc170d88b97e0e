use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{field} {reason}")]
    Config { field: &'static str, reason: String },

    #[error("dimension mismatch at row {row}")]
    DimensionMismatch { row: usize },

    #[error("non-finite value at ({row},{col})")]
    NonFinite { row: usize, col: usize },

    #[error("empty matrix")]
    EmptyMatrix,

    #[error("not an RZF file")]
    BadMagic,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("entropy clustering input exceeds cap ({len} > {cap})")]
    EntropyCapExceeded { len: usize, cap: usize },

    #[error("partition invariant violated: {0}")]
    NotAPartition(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
