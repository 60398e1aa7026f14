use thiserror::Error;

/// Errors raised while building networks, grids and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid solitary wave: {0}")]
    InvalidWave(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("singular system matrix ({0})")]
    SingularMatrix(String),

    #[error("instability at step {step} (t = {time}): last finite max |u| = {max_abs:e}")]
    Unstable {
        step: usize,
        time: f64,
        /// Time of the last state that was entirely finite.
        last_stable_time: f64,
        max_abs: f64,
    },

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("empty history")]
    EmptyHistory,
}

pub type Result<T> = std::result::Result<T, Error>;
