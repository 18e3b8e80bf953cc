use thiserror::Error;

use crate::steady::SteadyState;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("mechanical susceptibility is singular (undamped oscillator driven on resonance)")]
    SingularSusceptibility,

    #[error("degenerate cavity resonance: |Theta1*Theta2 + g^2| = {magnitude:e}")]
    DegenerateResonance { magnitude: f64 },

    #[error("steady state did not converge in {iterations} iterations (last relative change {last_change:e}); the system may be bistable")]
    IterationLimit {
        iterations: usize,
        last_change: f64,
        last: Box<SteadyState>,
    },

    #[error("steady-state iteration diverged after {iterations} iterations")]
    Divergence { iterations: usize },

    #[error("intensity ratio undefined: cavity A field is zero")]
    UndefinedRatio,

    #[error("probe amplitude must be positive to normalize the reflection")]
    UndefinedNormalization,

    #[error("sideband system is singular or ill-conditioned (condition estimate {condition:e})")]
    Conditioning { condition: f64 },

    #[error("closed-form assumption violated: {0}")]
    Assumption(String),

    #[error("closed-form coefficient `{0}` vanishes")]
    SingularCoefficient(&'static str),

    #[error("found {found} dip(s), at least two are needed for a separation")]
    InsufficientFeatures { found: usize },

    #[error("invalid fit input: {0}")]
    FitInput(String),

    #[error("normal equations are singular even with escalated damping")]
    SingularNormalEquations,
}
