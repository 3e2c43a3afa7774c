use thiserror::Error;

use crate::rate::RateResult;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fields live on different bases")]
    BasisMismatch,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("run diverged at step {step}")]
    Diverged { step: usize },

    #[error("initial energy {energy:.3e} exceeds the configured cap {cap:.3e}")]
    EnergyCap { energy: f64, cap: f64 },

    #[error("event budget exceeded: {expected:.3e} expected events, cap {cap:.3e}")]
    EventBudget { expected: f64, cap: f64 },

    #[error("thinning bound r_max = {r_max} is below the control maximum {phi_max}")]
    ThinningBound { r_max: f64, phi_max: f64 },

    #[error("negative intensity {value} at mark {mark}, node {node}")]
    NegativeIntensity { value: f64, mark: usize, node: usize },

    #[error("conjugate gradients stopped after {} iterations with relative residual {:.3e}", .0.iterations, .0.relative_residual)]
    NotConverged(Box<RateResult>),

    #[error("config: {0}")]
    Config(String),

    #[error("config hash mismatch: {0} vs {1}")]
    HashMismatch(String, String),

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
