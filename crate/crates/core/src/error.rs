use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("degenerate parameterization: {0}")]
    DegenerateParameterization(String),

    /// The design problem has no acceptable solution. `residual` is the best
    /// objective value reached and `best` the parameters that achieved it.
    #[error("design infeasible: {reason} (best residual {residual:.3e})")]
    DesignInfeasible {
        reason: String,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("fit failure: {0}")]
    FitFailure(String),

    #[error("ill-conditioned fit (condition number {condition:.3e}): {message}")]
    IllConditioned { condition: f64, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
