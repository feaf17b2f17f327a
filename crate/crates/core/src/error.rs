use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid coefficient: {0}")]
    InvalidCoefficient(String),
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("not summable: {0}")]
    NotSummable(String),
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("lambda = {lambda} lies outside {region}")]
    OutsideRegion { lambda: String, region: String },
    #[error("below threshold: contraction bound {bound:.4e} >= 1/2 at |lambda| = {modulus:.4}")]
    BelowThreshold { bound: f64, modulus: f64 },
    #[error("fixed-point iteration stalled after {iterations} iterations (increment {increment:.3e})")]
    NotConverged { iterations: usize, increment: f64 },
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
