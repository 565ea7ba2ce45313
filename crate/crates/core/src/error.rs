use thiserror::Error;

/// Errors raised by the numerical operations of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("wave state has no packets")]
    EmptyState,

    #[error("packet width must be positive and finite, got sigma = {0}")]
    InvalidWidth(f64),

    #[error("invalid detector window: {0}")]
    InvalidWindow(String),

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("density {density:e} below node floor at x = {x}, t = {t}")]
    NodeProximity { x: f64, t: f64, density: f64 },

    #[error("time must be positive, got t = {0}")]
    NonPositiveTime(f64),

    #[error("rejection sampler acceptance rate {rate:.4} below 1%")]
    EnvelopeFailure { rate: f64 },

    #[error("threshold not bracketed on the momentum grid: {0}")]
    Unbracketed(String),

    #[error("no-go pattern not satisfied: {0}")]
    PatternNotSatisfied(String),
}

pub type Result<T> = std::result::Result<T, Error>;
