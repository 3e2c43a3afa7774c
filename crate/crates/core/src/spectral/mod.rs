//! Divergence-free Fourier representation of periodic 2-D velocity fields.

mod basis;
mod fft;
mod field;
mod ops;

pub use basis::{Basis, MIN_DEALIAS_FACTOR};
pub use field::{Norms, PhysicalVectorField, SpectralField};
pub use ops::{
    apply_stokes, linearized_advection, linearized_advection_transpose, nonlinear_b, project_leray,
    trilinear_b,
};
