use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WeightError {
    #[error("weight vector is empty")]
    Empty,
    #[error("weights are not ascending at index {0}")]
    NotAscending(usize),
    #[error("weights sum to {0}, not 1")]
    SumNotOne(String),
    #[error("weight {index} = {value} lies outside (0, 1]")]
    OutOfRange { index: usize, value: String },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Weights(#[from] WeightError),

    #[error("tau must exceed 1 (got {0})")]
    TauNotAboveOne(String),

    #[error("delta = {delta} is not admissible (must satisfy 0 < delta <= {bound})")]
    DeltaOutOfRange { delta: String, bound: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("scale too large: {what}: ~{needed} needed, budget is {budget}")]
    ScaleTooLarge { what: &'static str, needed: String, budget: u64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("search exhausted without a witness: {0}")]
    NotFound(String),

    #[error("comparison undecided within the exact-arithmetic budget: {0}")]
    Undecided(String),

    #[error("quantity {0} is not rational; toy mode needs rational geometry")]
    Irrational(String),

    #[error("theorem-backed assertion failed: {0}")]
    TheoremViolation(String),

    #[error("construction failed at level {level}, node {node}: {reason}")]
    Construction { level: usize, node: usize, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
