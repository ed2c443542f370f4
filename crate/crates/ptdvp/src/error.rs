//! Crate-wide error type.
//!
//! Two broad classes matter to callers: configuration errors (bad input,
//! caught before any numerics run) and runtime errors (numerical breakdown,
//! backend failures, I/O). The CLI maps the former to exit code 2 and the
//! latter to exit code 3.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user input: rejected before any computation starts.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Numerical failure at runtime (zero-norm states, non-convergence
    /// where convergence is required, degenerate decompositions).
    #[error("numerical failure: {0}")]
    Numerics(String),

    /// Error surfaced by the dense linear-algebra backend.
    #[error("linear-algebra backend: {0}")]
    Backend(#[from] ndarray_linalg::error::LinalgError),

    /// Violation of the worker message protocol (wrong tag, closed channel).
    #[error("worker transport: {0}")]
    Transport(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),

    /// Malformed checkpoint file.
    #[error("checkpoint format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// CLI process exit code: 2 for configuration errors, 3 for everything
    /// that failed at runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 3,
        }
    }
}
