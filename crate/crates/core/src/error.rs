use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("non-finite function value at {point:?}")]
    Evaluation { point: Vec<f64> },

    #[error("objective is not finite at the starting point {0:?}")]
    OptimizerStart(Vec<f64>),

    #[error("information matrix not positive definite")]
    NotPositiveDefinite,

    #[error("moment system infeasible: {0}")]
    MomentInfeasible(String),

    #[error("moment estimate outside parameter space: {0}")]
    MomentOutsideSpace(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("linear predictor overflow at row {row}")]
    LinearPredictor { row: usize },

    #[error("insufficient cells: {cells} cells after merging, need at least {needed}")]
    InsufficientCells { cells: usize, needed: usize },

    #[error("cannot compare models: {0}")]
    Comparison(String),

    #[error("internal consistency error: {0}")]
    Internal(String),
}
