//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SlgpError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point outside domain: {0}")]
    OutsideDomain(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("data error (line {line}): {message}")]
    Data { line: u64, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SlgpError>;
