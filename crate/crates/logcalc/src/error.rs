//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CalcError {
    #[error("division by zero")]
    DivisionByZero,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("product is not computable: {0}")]
    NonComputableProduct(String),

    #[error("evaluation is not computable: {0}")]
    NonComputableEvaluation(String),

    #[error("exactness violation: {0}")]
    ExactnessViolation(String),

    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown suite: {0}")]
    UnknownSuite(String),

    #[error("dimension mismatch: {0}")]
    Dim(String),
}
