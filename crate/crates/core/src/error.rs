use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("coordinate index {index} outside materialized range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid argument: {0}")]
    InvalidArg(String),
    #[error("degree overflow: a ({s},{t})-form does not exist on C^{n}")]
    DegreeOverflow { s: usize, t: usize, n: usize },
    #[error("invalid degree: {0}")]
    InvalidDegree(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("dimension mismatch: need {needed} coordinates, got {got}")]
    DimensionMismatch { needed: usize, got: usize },
    #[error("right-hand side is not dbar-closed")]
    NotClosed,
    #[error("ansatz insufficient: residual {residual} after {retries} enlargements")]
    AnsatzInsufficient { residual: String, retries: usize },
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("parse error: {0}")]
    Parse(String),
}
