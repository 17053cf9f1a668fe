//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty evaluation region: requested radius {requested}, usable radius {usable}")]
    EmptyRegion { requested: f64, usable: f64 },

    #[error("insufficient stencil margin: {0}")]
    InsufficientMargin(String),

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("evaluation budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("operator spec rejected: {0}")]
    SpecRejected(String),

    #[error("derivative reconstruction too noisy: {0}")]
    DerivativeNoise(String),
}

pub type Result<T> = std::result::Result<T, Error>;
