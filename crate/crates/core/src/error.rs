use thiserror::Error;

use crate::matpoly::Var;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A scalar kernel was evaluated outside its domain, e.g. a denominator
    /// Pochhammer symbol vanished before the series terminated.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("variable mismatch: {left} vs {right}")]
    VariableMismatch { left: Var, right: Var },

    #[error("matrix polynomial is not unipotent lower triangular")]
    NotUnipotent,

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("quadrature rule exact to degree {available} but integrand has degree {needed}")]
    UnderResolved { needed: usize, available: usize },

    #[error("hypergeometric series failed to terminate (residual {residual:e})")]
    Termination { residual: f64 },

    #[error("sampled function is not a polynomial of degree {degree} (residual {residual:e})")]
    NotPolynomial { degree: usize, residual: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}
