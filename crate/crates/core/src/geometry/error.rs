use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unsupported objective count {0}")]
    UnsupportedDimension(usize),
    #[error("operation requires a non-empty set")]
    EmptySet,
    #[error("not a simplex weight: {0}")]
    NotOnSimplex(String),
    #[error("explored payoffs are inconsistent with the value box (infeasible bound)")]
    Inconsistent,
    #[error("optimistic bound is unbounded; explore the extreme weights first")]
    Unbounded,
    #[error("relative improvement undefined for a zero upper bound")]
    DivisionGuard,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
