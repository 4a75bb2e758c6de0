use thiserror::Error;

/// Errors raised by the numeric core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("insufficient data: {rows} rows for {cols} variables")]
    InsufficientData { rows: usize, cols: usize },

    #[error("column {column} is not mean-centred (sum {sum:e})")]
    NotCentred { column: usize, sum: f64 },

    #[error("variable {index} has non-positive variance {variance:e}")]
    DegenerateVariance { index: usize, variance: f64 },

    #[error("matrix is singular or ill-conditioned (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("zero-norm operand in angle computation")]
    DegenerateAngle,

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("block mismatch: expected {expected} eigenpairs, found {found:?}")]
    BlockMismatch { expected: usize, found: Vec<usize> },

    #[error("structural violation: {0}")]
    Structural(String),
}

pub type Result<T> = std::result::Result<T, Error>;
