use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("point leaves the y > 0 chart: {0}")]
    Chart(String),

    #[error("non-finite value while evaluating {0}")]
    NonFinite(String),

    #[error("singular configuration: {0}")]
    Singular(String),

    #[error("rank-deficient regression: {0}")]
    RankDeficient(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integration failed at t = {t_reached}: {kind}")]
    Integration { kind: IntegrationFailure, t_reached: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonNonConvergence { iterations: usize, residual: f64 },

    #[error("Jacobian is numerically singular (condition estimate {condition:e})")]
    SingularJacobian { condition: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrationFailure {
    #[error("step size fell below h_min = {h_min:e}")]
    StepUnderflow { h_min: f64 },
    #[error("copy {copy} has y = {y:e} below the chart floor")]
    ChartExit { copy: usize, y: f64 },
    #[error("coefficient evaluation: {0}")]
    Coefficients(EvalError),
}
