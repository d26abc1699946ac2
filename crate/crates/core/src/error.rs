//! Error types shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionError { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    ConfigError(String),

    #[error("cost too large: {0}")]
    CostTooLarge(String),

    #[error("time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    /// Descent did not reach the gradient tolerance; carries the best
    /// value and Euler-Lagrange residual seen so far.
    #[error("action minimisation failed to converge (best value {value}, residual {residual})")]
    OptimizationFailed { value: f64, residual: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("reversibility set empty at time index {0}")]
    EmptyReversibilitySet(usize),

    #[error("flow integration failed: {0}")]
    IntegrationFailed(String),

    #[error("degenerate test family: every member was skipped")]
    DegenerateFamily,
}
