use thiserror::Error;

use crate::table::PairIndex;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid pair ({j},{k}) for n = {n}: need 1 <= j < k <= n")]
    InvalidPair { j: usize, k: usize, n: usize },

    #[error("category count {n} is too small (need at least {min})")]
    TooSmall { n: usize, min: usize },

    #[error("dimension mismatch: {left} vs {right} categories")]
    DimensionMismatch { left: usize, right: usize },

    #[error("move would make cell {cell} negative")]
    NegativeCell { cell: PairIndex },

    #[error("sufficient statistic component {component} is zero; the MLE lies on the boundary")]
    ZeroMargin { component: String },

    #[error("fit did not converge within {iterations} iterations (max margin violation {violation:e})")]
    DidNotConverge { iterations: usize, violation: f64 },

    #[error("expected count at {cell} is zero")]
    ZeroExpected { cell: PairIndex },

    #[error("null-model expected count at {cell} is zero")]
    ZeroNull { cell: PairIndex },

    #[error("fiber has more than {cap} tables")]
    FiberTooLarge { cap: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
