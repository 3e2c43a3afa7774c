//! Simulation and verification toolkit for the 2-D Navier–Stokes equation on
//! the periodic square, driven by compensated multiplicative Poisson noise.
//!
//! The crate is layered bottom-up:
//!
//! * [`spectral`]: divergence-free Fourier fields, the Stokes operator, the
//!   Leray projection and the dealiased advection term.
//! * [`dynamics`]: exponential time stepping of the deterministic equation,
//!   the linearised skeleton equation and mild solutions.
//! * [`noise`]: mark spaces, Poisson random measures, thinning, the entropy
//!   cost of a control and the noise coefficient.
//! * [`stochastic`]: the jump-driven equation, its controlled version and the
//!   rescaled fluctuation process.
//! * [`rate`]: the quadratic rate function by least-norm control with an exact
//!   discrete adjoint.
//! * [`experiment`]: configuration, ensembles and the convergence experiments,
//!   persisted as CSV and JSON.

pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod noise;
pub mod rate;
pub mod seed;
pub mod spectral;
pub mod stats;
pub mod stochastic;

pub use error::{Error, Result};
