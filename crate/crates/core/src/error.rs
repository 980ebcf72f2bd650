//! Error type shared by every module.

use thiserror::Error;

use crate::problem::ControlField;

/// Errors raised by solvers, checks and the command line front end.
#[derive(Debug, Error)]
pub enum GvError {
    /// Bad grid, dimension mismatch, empty box and similar caller mistakes.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A solver produced a NaN or infinity.
    #[error("numerical error at node ({i}, {j}): {what}")]
    Numerical { i: usize, j: usize, what: String },

    /// Fixed-point iteration ran out of iterations.
    #[error("no convergence after {iterations} iterations (last delta {last_delta:e})")]
    Divergence { iterations: usize, last_delta: f64 },

    /// Optimizer line search could not find an acceptable step.
    #[error("line search stalled at iteration {iteration} (cost {cost:e})")]
    Stalled {
        iteration: usize,
        cost: f64,
        snapshot: Box<ControlField>,
    },

    /// A forward or adjoint solve failed inside the optimizer.
    #[error("optimizer failed at iteration {iteration}: {source}")]
    Optimizer {
        iteration: usize,
        #[source]
        source: Box<GvError>,
        snapshot: Box<ControlField>,
    },

    /// Problem callbacks disagree with their declared Lipschitz constants or Jacobians.
    #[error("problem validation failed: {0}")]
    Validation(String),

    /// Bad configuration file or flag.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GvError>;

/// Shorthand for [`GvError::InvalidArgument`].
pub(crate) fn invalid(msg: impl Into<String>) -> GvError {
    GvError::InvalidArgument(msg.into())
}
