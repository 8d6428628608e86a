use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unknown agent: {0}")]
    UnknownAgent(String),
    #[error("unknown item: {0}")]
    UnknownItem(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("gcd undefined for zero vector")]
    ZeroVector,
    #[error("denominator must be positive")]
    NonPositiveDenominator,
    #[error("mode mismatch: {0}")]
    ModeMismatch(String),
    #[error("pair is proportional")]
    PairProportional,
    #[error("pair is not proportional")]
    PairNotProportional,
    #[error("agent does not envy the target")]
    NoEnvy,
    #[error("target {target} is not divisible by gcd {gcd}")]
    NotDivisible { target: String, gcd: u64 },
    #[error("model has an unbounded variable: {0}")]
    UnboundedModel(String),
    #[error("instance too large for oracle (cap {0} exceeded)")]
    CapExceeded(u64),
    #[error("certification failed: {0}")]
    Certification(String),
}

pub type Result<T> = std::result::Result<T, Error>;
