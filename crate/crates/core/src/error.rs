use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum AlpnError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid cone structure: {0}")]
    InvalidCone(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("block index {index} out of range (cone has {blocks} blocks)")]
    BlockOutOfRange { index: usize, blocks: usize },

    #[error("active-set limit of {0} inner iterations exceeded")]
    InnerIterationLimit(usize),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("enumeration bound exceeded: {count} constraints (limit {limit})")]
    EnumerationBound { count: usize, limit: usize },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("parse error in {path}: {msg}")]
    Parse { path: String, msg: String },

    #[error("shape error in field `{field}`: {msg}")]
    Shape { field: String, msg: String },

    #[error("unsupported format version `{found}` (expected `{expected}`)")]
    Version { found: String, expected: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, AlpnError>;
