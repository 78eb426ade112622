use thiserror::Error;

/// Errors produced by the solvers and field operations.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no convergence after {iterations} iterations (last residual {last_residual:.3e})")]
    NoConvergence {
        iterations: usize,
        last_residual: f64,
        history: Vec<f64>,
    },

    #[error("iteration reached a solution with {sign_changes} sign changes")]
    WrongBranch { sign_changes: usize },

    #[error("metric breakdown: 1 + eps*alpha = {value:.3e} at r = {r:.3e}")]
    MetricBreakdown { r: f64, value: f64 },

    #[error("linear solve failed: {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
