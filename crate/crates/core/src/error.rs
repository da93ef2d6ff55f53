use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A fixed (non-extendable) potential was queried outside its window.
    #[error("site {site} lies outside the realized window [{lo}, {hi}]")]
    OutsideWindow { site: i64, lo: i64, hi: i64 },

    #[error("interval too large for the direct solver: {len} > {max}")]
    IntervalTooLarge { len: u64, max: u64 },

    #[error("step budget exhausted: {0}")]
    BudgetExhausted(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
