use thiserror::Error;

use crate::term::Object;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("type mismatch in {context}: expected {expected}, found {found}")]
    TypeMismatch {
        context: &'static str,
        expected: Object,
        found: Object,
    },

    #[error("boundary mismatch in {context}: {left} vs {right}")]
    BoundaryMismatch {
        context: &'static str,
        left: String,
        right: String,
    },

    #[error("invalid signature: {0}")]
    Signature(String),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("unknown sort `{0}`")]
    UnknownSort(String),

    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),

    #[error("parse error at offset {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("carrier mismatch on wire {wire}: expected {expected}, found {found}")]
    Carrier {
        wire: usize,
        expected: String,
        found: String,
    },

    #[error("wrong arity: expected {expected} values, found {found}")]
    Arity { expected: usize, found: usize },

    #[error("unsupported interpretation: {0}")]
    UnsupportedInterpretation(String),

    #[error("exhaustive enumeration needs {tuples} input tuples, above the cap of {cap}")]
    EnumerationTooLarge { tuples: u128, cap: u128 },

    #[error("invalid 2-cell: {0}")]
    Cell(#[from] crate::two_optic::CellError),

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
