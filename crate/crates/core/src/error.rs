use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("all coordinates are zero")]
    ZeroVector,
    #[error("indeterminate evaluation at step {step}")]
    IndeterminateEvaluation { step: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("every sampled line lies in the common zero set ({attempts} attempts)")]
    DegenerateRestriction { attempts: usize },
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("point is within tolerance of the indeterminacy locus at step {step}")]
    NearIndeterminate { step: usize },
    #[error("method does not match locus dimension: {0}")]
    WrongDimension(String),
    #[error("degenerate family: {0}")]
    DegenerateFamily(String),
    #[error("empty point set")]
    EmptySet,
    #[error("line is degenerate: the two points coincide")]
    DegenerateLine,
    #[error("p-adic precision exhausted at step {step}")]
    PrecisionExhausted { step: usize },
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("invalid pair: {0}")]
    InvalidPair(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
