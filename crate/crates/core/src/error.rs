use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix {which} is not symmetric")]
    NonSymmetric { which: &'static str },
    #[error("B is singular (|det B| = {det_abs:e})")]
    SingularB { det_abs: f64 },
    #[error("C_I = Im C is not positive definite (smallest eigenvalue {eigenvalue:e})")]
    NonPositiveCI { eigenvalue: f64 },
    #[error("matrix {which} is ill-conditioned (condition number {cond:e})")]
    IllConditioned { which: &'static str, cond: f64 },
    #[error("semiclassical parameter h = {h} is outside (0, 1]")]
    InvalidH { h: f64 },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("derived geometry failed its self-check: {0}")]
    InvariantViolation(String),
    #[error("quadrature order {order} is outside [2, 256]")]
    OrderOutOfRange { order: usize },
    #[error("integrand is not finite at quadrature node {node:?}")]
    NonFiniteSample { node: Vec<f64> },
    #[error("symbol evaluated to a non-finite value")]
    NonFinite,
    #[error("unsupported symbol: {0}")]
    UnsupportedSymbol(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
