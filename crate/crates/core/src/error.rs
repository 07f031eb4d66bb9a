use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} (expected {expected}, got {actual})")]
    Dimension {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("duplicate entry at row {row}, column {col}")]
    DuplicateEntry { row: usize, col: usize },

    #[error("support of bit vector is not strictly increasing at position {position}")]
    UnsortedSupport { position: usize },

    #[error("prior out of range at column {col}: p = {value}")]
    PriorOutOfRange { col: usize, value: f64 },

    #[error("column {col} of the check matrix is empty (error flips no detector)")]
    EmptyColumn { col: usize },

    #[error("row {row} has no X/Z type tag")]
    UntypedRow { row: usize },

    #[error("identical check-matrix columns {group:?} have different action columns")]
    ActionMismatch { group: Vec<usize> },

    #[error("columns {cols:?} flip no detector but act nontrivially on the logicals")]
    UndetectableLogical { cols: Vec<usize> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("problem has {cols} columns; exhaustive search is capped at {cap}")]
    OracleCap { cols: usize, cap: usize },

    #[error("no error vector reproduces the syndrome")]
    InconsistentSyndrome,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV output failed: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dimension(what: &'static str, expected: usize, actual: usize) -> Self {
        Error::Dimension {
            what,
            expected,
            actual,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
