use thiserror::Error;

/// Error type shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The requested operation exists but is not offered for these arguments
    /// (for example an operator-norm index pair outside the supported set).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A population model fails one of its structural assumptions.
    #[error("model invalid: {0}")]
    ModelInvalid(String),

    /// The semidefinite solver produced non-finite iterates or was asked to
    /// treat a non-converged run as fatal. Residuals are the last observed.
    #[error("solver failed after {iterations} iterations: {reason} (primal {primal_residual:.3e}, dual {dual_residual:.3e})")]
    SolverFailed {
        reason: String,
        iterations: usize,
        primal_residual: f64,
        dual_residual: f64,
    },

    /// An iterative numerical kernel did not reach its accuracy target.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A sweep configuration file could not be parsed or validated.
    #[error("invalid config: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
