//! Deterministic time integration: the Navier–Stokes limit equation, the
//! linearised skeleton equation and mild solutions of `dZ = -AZ dt + f dt`.
//!
//! All three share one exponential two-stage step (ETD2RK): diffusion is
//! integrated exactly per mode and the remaining terms are treated explicitly,
//!
//! ```text
//! a       = e^{-λh} x_n + h φ₁(λh) F(x_n, t_n)
//! x_{n+1} = a + h φ₂(λh) (F(a, t_{n+1}) - F(x_n, t_n))
//! ```
//!
//! with `λ = ν|κ|²`, `φ₁(z) = (1 - e^{-z})/z` and `φ₂(z) = (e^{-z} - 1 + z)/z²`.
//! The step is second order, unconditionally stable in the diffusion, exact for
//! forcing that is affine in time, and linear in `F` whenever `F` is linear.

mod grid;
mod snapshot;
mod solvers;
mod trajectory;

pub use grid::{Force, TimeGrid};
pub use snapshot::{read_snapshot, write_snapshot, SNAPSHOT_MAGIC};
pub use solvers::{
    energy_balance_residual, solve_mild_forced, solve_nse, solve_nse_with, solve_skeleton, solve_skeleton_with,
    skeleton_source, SkeletonOptions, SolverOptions,
};
pub(crate) use solvers::{check_initial, check_state, nse_rhs, Etd2};
pub use trajectory::Trajectory;
