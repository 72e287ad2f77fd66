use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("ring ratio 1 with {n_rings} rings makes points coincide; enable degenerate constellations to allow it")]
    DegenerateRingRatio { n_rings: usize },

    #[error("ring index {index} out of range for a constellation with {n_rings} rings")]
    RingIndex { index: usize, n_rings: usize },

    #[error("block length must be at least 2 (one symbol overlaps consecutive blocks), got {0}")]
    BlockLength(usize),

    #[error("oracle enumeration needs M^L = {candidates} candidate inputs, above the budget of {budget}")]
    OracleBudget { candidates: String, budget: u64 },

    #[error("length mismatch: received block has {received} symbols, input block has {input}")]
    LengthMismatch { received: usize, input: usize },

    #[error("log-sum-exp of an empty list")]
    EmptyInput,

    #[error("Monte Carlo estimate is not finite ({0})")]
    NonFinite(&'static str),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
