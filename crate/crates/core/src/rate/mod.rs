//! The quadratic rate function of the linearised dynamics, computed as the
//! least-norm control that steers the discrete skeleton equation to a given
//! terminal state.
//!
//! Gradients use the transpose of the discrete stepper (discretise, then
//! optimise), so the adjoint identity holds to rounding error.

mod operator;
mod solve;

pub use operator::SkeletonOperator;
pub use solve::{
    mode_directions, rate_level_set, rate_terminal, top_normal_direction, LevelSetOptions, LevelSetResult,
    RateOptions, RateResult,
};
