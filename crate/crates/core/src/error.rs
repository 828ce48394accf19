use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The explicit update needs `lambda + 2r <= 1`.
    #[error("stability threshold violated: lambda + 2r = {sum} > 1 (lambda = {lambda}, r = {r})")]
    StabilityViolation { lambda: f64, r: f64, sum: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("{name} is negative ({value}) at x = {x}, s = {s}")]
    NegativeCoefficient {
        name: &'static str,
        value: f64,
        x: f64,
        s: f64,
    },

    #[error("non-finite state at time level {level}")]
    NonFiniteState { level: usize },

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("adaptive quadrature stalled on [{a}, {b}]")]
    QuadratureFailure { a: f64, b: f64 },

    #[error("grids are not aligned: {0}")]
    Alignment(String),
}
