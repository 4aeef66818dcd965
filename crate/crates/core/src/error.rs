use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("modulus {0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("modulus mismatch: {left} vs {right}")]
    ModulusMismatch { left: u32, right: u32 },
    #[error("enumeration of {candidates} candidates exceeds budget {budget}")]
    BudgetExceeded { candidates: u128, budget: u128 },
    #[error("point set is empty")]
    EmptySet,
    #[error("motion set is empty")]
    EmptyMotionSet,
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
