use thiserror::Error;

use crate::breakdown::Branch;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate {branch} branch: probability {probability:e} below threshold")]
    DegenerateBranch { branch: Branch, probability: f64 },

    #[error("post-selection Fisher information is 0/0 at g = {g}; series fallback gives {fallback}")]
    IndeterminateFp { g: f64, fallback: f64 },

    #[error("closed forms exist for the symmetric coupling only")]
    UnsupportedCoupling,

    #[error("quadrature self-estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    GridTooCoarse { estimate: f64, tolerance: f64 },

    #[error("finite-difference step unstable: {coarse} vs {fine} (relative change {relative:e})")]
    StepUnstable { coarse: f64, fine: f64, relative: f64 },

    #[error("outcome {index} has negative probability {value:e}")]
    NegativeProbability { index: usize, value: f64 },

    #[error("outcome distribution sums to {sum}, expected 1")]
    NotNormalized { sum: f64 },

    #[error("state at g = {g} has norm {norm}, expected 1")]
    StateNotNormalized { g: f64, norm: f64 },

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("wavefunction row {row}: {message}")]
    WavefunctionFormat { row: usize, message: String },

    #[error("invalid wavefunction: {0}")]
    InvalidWavefunction(String),

    #[error("likelihood not identifiable on window [{lo}, {hi}]: {reason}")]
    NonIdentifiable { lo: f64, hi: f64, reason: String },
}

impl Error {
    /// Short variant name, used by front ends when reporting failures.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::DegenerateBranch { .. } => "DegenerateBranch",
            Error::IndeterminateFp { .. } => "IndeterminateFp",
            Error::UnsupportedCoupling => "UnsupportedCoupling",
            Error::GridTooCoarse { .. } => "GridTooCoarse",
            Error::StepUnstable { .. } => "StepUnstable",
            Error::NegativeProbability { .. } => "NegativeProbability",
            Error::NotNormalized { .. } => "NotNormalized",
            Error::StateNotNormalized { .. } => "StateNotNormalized",
            Error::BasisMismatch(_) => "BasisMismatch",
            Error::WavefunctionFormat { .. } => "WavefunctionFormat",
            Error::InvalidWavefunction(_) => "InvalidWavefunction",
            Error::NonIdentifiable { .. } => "NonIdentifiable",
        }
    }
}
