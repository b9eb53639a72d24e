use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("grid mismatch: expected depths {expected:?}, found {found:?}")]
    GridMismatch {
        expected: (u32, u32),
        found: (u32, u32),
    },

    #[error("invalid complexity: {0}")]
    InvalidComplexity(String),

    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("invalid slot assignment: {0}")]
    InvalidSlots(String),

    #[error("wrong parameter: {0}")]
    WrongParameter(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("arity mismatch: expected {expected}, found {found}")]
    Arity { expected: usize, found: usize },

    #[error("generator failure: {0}")]
    GeneratorFailure(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("wrong case: {0}")]
    WrongCase(String),

    #[error("truncation insufficient: tail {tail:e} exceeds threshold {threshold:e}")]
    TruncationInsufficient { tail: f64, threshold: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
