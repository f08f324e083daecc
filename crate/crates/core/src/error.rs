use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A key file line could not be parsed. Line numbers are 1-based.
    #[error("key file line {line}: {msg}")]
    KeyParse { line: usize, msg: String },

    #[error("invalid key: {0}")]
    InvalidKey(String),

    /// Every generated neighbor matrix must contain a non-zero element.
    #[error("neighbor matrix {label} is identically zero")]
    ZeroNeighborMatrix { label: &'static str },

    #[error("no fixed point in Z256 at row {row}, column {col}")]
    NoFixedPoint { row: usize, col: usize },

    #[error("dimension mismatch: {a_rows}x{a_cols} vs {b_rows}x{b_cols}")]
    DimensionMismatch {
        a_rows: usize,
        a_cols: usize,
        b_rows: usize,
        b_cols: usize,
    },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("attack: {0}")]
    Attack(String),

    #[error("layout line {line}: {msg}")]
    Layout { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
