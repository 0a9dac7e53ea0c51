use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("eigendecomposition did not converge")]
    EigenNoConvergence,

    #[error("unstable coefficient matrix (spectral abscissa {0:.3e})")]
    UnstableCoefficient(f64),

    #[error("solver breakdown: {0}")]
    SolverBreakdown(String),

    #[error("singular feedback equation (pivot {0:.3e})")]
    SingularFeedbackEquation(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("gain is not stabilizing")]
    NotStabilizing,

    #[error("initial gain not stabilizing")]
    InitialGainNotStabilizing,

    #[error("line search failed after {0} backtracks")]
    LineSearchFailed(usize),

    #[error("inner solver failure: {0}")]
    InnerSolverFailure(String),

    #[error("budget out of range: {0}")]
    BudgetOutOfRange(String),

    #[error("infeasible iterate: {0}")]
    InfeasibleIterate(String),

    #[error("no stabilizing initialization: {0}")]
    NoStabilizingInitialization(String),

    #[error("invalid plant: {0}")]
    InvalidPlant(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
