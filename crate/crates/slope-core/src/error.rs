use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SlopeError>;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum SlopeError {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid penalty sequence: {0}")]
    InvalidLambda(String),

    #[error("column {index} is constant and cannot be standardized")]
    ConstantColumn { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("step size underflow: curvature estimate grew without bound")]
    StepSizeUnderflow,

    #[error("no path step converged")]
    AllStepsFailed,

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
