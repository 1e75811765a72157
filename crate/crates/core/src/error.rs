use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("objective not evaluable near the given point")]
    ObjectiveNotEvaluable,

    #[error("no Hessian oracle")]
    NoHessianOracle,

    #[error("zero right-hand side")]
    ZeroRightHandSide,

    #[error("numerical breakdown at inner iteration {iteration}")]
    NumericalBreakdown { iteration: usize },

    #[error("degenerate L-BFGS middle matrix")]
    DegenerateMiddleMatrix,

    #[error("direction is not a descent direction (g'd = {slope})")]
    NotDescent { slope: f64 },

    #[error("curvature along an NPC direction must be non-positive (d'Bd = {curvature})")]
    PositiveCurvature { curvature: f64 },

    #[error("stepsize stagnation: step fell below {lambda_min:e}")]
    StepsizeStagnation { lambda_min: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
