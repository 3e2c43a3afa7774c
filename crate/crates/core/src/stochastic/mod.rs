//! The jump-driven equation `u^ε`, its controlled version `X^ε` and the
//! rescaled fluctuation `Y^ε = (X^ε - u⁰)/a(ε)`.
//!
//! Jumps are handled on the fixed time grid: in each step the number of base
//! events for mark `i` is `Poisson(ε⁻¹ r_max ϑ_i dt)`, each carrying a uniform
//! height on `[0, r_max]` and kept iff the height lies below `φ(y_i, t_n)`.
//! The coefficient is evaluated at the pre-step state.

mod engine;
mod ensemble;
mod scaling;

pub use engine::{
    moderate_process, simulate_controlled_x, simulate_controlled_x_with, simulate_u_eps, simulate_u_eps_with,
    stream_controlled_x, StochasticOptions,
};
pub use ensemble::{ensemble_stats, run_replicas, trajectory_diagnostics, MomentTable, Moments, RunRecord};
pub use scaling::{ScalingSpec, DEFAULT_GAMMA};
