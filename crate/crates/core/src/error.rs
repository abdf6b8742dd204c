//! Shared error type. Every fallible operation in the crate reports
//! through [`Error`]; messages are stable so the CLI can surface them
//! verbatim.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("signature needs p + q >= 3, got ({p},{q})")]
    BadSignature { p: usize, q: usize },

    #[error("unparseable rational '{0}'")]
    BadRational(String),

    #[error("resonant weight: {0}")]
    Resonance(String),

    #[error("weight mismatch: {0}")]
    WeightMismatch(String),

    #[error("degree out of range: {0}")]
    DegreeOverflow(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
