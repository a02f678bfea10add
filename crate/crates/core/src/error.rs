use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("permutation {0} is reducible")]
    ReducibleInput(String),
    #[error("no vertex of the Rauzy class satisfies the goal")]
    GoalUnreachable,
    #[error("point outside [0,1)")]
    OutOfDomain,
    #[error("rightmost discontinuities coincide at induction step {step}")]
    DegenerateCoincidence { step: usize },
    #[error("invalid seed: {0}")]
    InvalidSeed(String),
    #[error("no label/notation convention reproduces the reference matrices")]
    ConventionUnresolved,
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("search cap {cap} exceeded")]
    SearchCapExceeded { cap: u64 },
    #[error("budget of {budget} exceeded")]
    BudgetExceeded { budget: usize },
    #[error("orbit meets a discontinuity at index {index}")]
    OrbitHitsDiscontinuity { index: i64 },
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("value {value} outside [{lo}, {hi}]")]
    OutOfRange { value: u64, lo: u64, hi: u64 },
    #[error("table direction gives a nonpositive interval length")]
    InvalidDirection,
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("path product disagrees with its closed form: {0}")]
    PathMismatch(String),
    #[error("construction failed: {0}")]
    ConstructionFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
