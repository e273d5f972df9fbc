use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("assembled system is numerically singular: {0}")]
    SingularSystem(String),

    #[error(
        "Newton iteration did not converge after {iterations} steps (last residual {residual:.3e})"
    )]
    NewtonDidNotConverge { iterations: usize, residual: f64 },

    #[error("optimizer did not converge after {iterations} outer iterations (last residuals: stationarity {stationarity:.3e}, primal {primal:.3e})")]
    OptimizerDidNotConverge {
        iterations: usize,
        stationarity: f64,
        primal: f64,
    },

    #[error("point is not a member of the admissible set: {0}")]
    NotAdmissible(String),

    #[error("no start point converged; solution set is empty")]
    EmptySolutionSet,

    #[error("solution set is empty")]
    EmptySet,

    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("instance schema error: {0}")]
    Schema(String),

    #[error("instance validation error: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
