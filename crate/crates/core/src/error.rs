//! Crate-wide error type.

use nalgebra::DVector;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("state outside domain: {0}")]
    OutsideDomain(String),

    #[error("capacity guard exceeded: {0}")]
    Capacity(String),

    #[error("trajectory diverged at t = {time}: state norm exceeded bound")]
    Divergence { time: f64, last_state: DVector<f64> },

    #[error("callback evaluation failed: {0}")]
    Evaluation(String),

    #[error("modification specification violated: {0}")]
    Spec(String),

    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("unknown builtin scenario `{0}`")]
    UnknownBuiltin(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
