use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// `L/L_a` at or above the random-laser threshold `π`.
    #[error("gain ratio L/La = {0} must be below the laser threshold pi")]
    GainAboveThreshold(f64),

    #[error("gain ratio L/La = {0} must be non-negative")]
    NegativeGain(f64),

    /// Medium not in the diffusive regime (`L/l <= 1`).
    #[error("thickness ratio L/l = {0} must exceed 1 (diffusive regime)")]
    ThinMedium(f64),

    #[error("channel count must be at least 1, got {0}")]
    BadChannels(i64),

    #[error("squeezing parameter r = {0} must be finite and non-negative")]
    BadSqueezing(f64),

    #[error("physical quantity `{name}` = {value} must be finite and strictly positive")]
    NonPositiveUnit { name: &'static str, value: f64 },

    #[error("{what} = {value} outside the admissible domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// The shot-noise margin is identically zero for a linear medium and
    /// carries no sign information there.
    #[error("sub-shot-noise margin is undefined for a linear medium (L/La = 0)")]
    ZeroGain,

    #[error("gain ratio L/La = {0} lies in the excluded near-threshold band")]
    NearThreshold(f64),

    #[error("grid `{0}` must be non-empty and sorted ascending")]
    BadGrid(&'static str),

    #[error("at least {min} realizations required, got {got}")]
    TooFewRealizations { min: u64, got: u64 },
}
