//! Mark spaces, Poisson random measures and their thinning, the entropy cost
//! of a control and the noise coefficient.

mod coefficient;
mod control;
mod marks;
mod prm;

pub use coefficient::{BoundKind, Coefficient, ConditionReport, NoiseModel, Violation};
pub use control::{control_class_check, cost_lt, entropy_l, psi_truncate, ControlField, ControlKind};
pub use marks::MarkSpace;
pub use prm::{
    poisson_count, sample_prm, sample_prm_marked, sample_prm_with_cap, thin_to_control, JumpEvent, JumpStream,
    DEFAULT_EVENT_CAP,
};
