use std::sync::Arc;

use crate::dynamics::TimeGrid;
use crate::error::{Error, Result};
use crate::spectral::{Basis, SpectralField};

/// Fields on a uniform time grid; `fields[n]` is the state at `t0 + n·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    t0: f64,
    dt: f64,
    fields: Vec<SpectralField>,
}

impl Trajectory {
    pub fn new(t0: f64, dt: f64, fields: Vec<SpectralField>) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::InvalidParameter("trajectory needs at least one field".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("trajectory step must be positive, got {dt}")));
        }
        let first = &fields[0];
        if fields.iter().any(|f| !f.same_basis(first)) {
            return Err(Error::BasisMismatch);
        }
        Ok(Self { t0, dt, fields })
    }

    pub(crate) fn from_parts(t0: f64, dt: f64, fields: Vec<SpectralField>) -> Self {
        Self { t0, dt, fields }
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.dt * (self.fields.len() - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn n_steps(&self) -> usize {
        self.fields.len() - 1
    }

    pub fn basis(&self) -> &Arc<Basis> {
        self.fields[0].basis()
    }

    pub fn fields(&self) -> &[SpectralField] {
        &self.fields
    }

    pub fn get(&self, n: usize) -> &SpectralField {
        &self.fields[n]
    }

    pub fn terminal(&self) -> &SpectralField {
        self.fields.last().expect("non-empty")
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid::new(self.t_end() - self.t0, self.n_steps().max(1)).expect("valid trajectory grid")
    }

    /// Errors unless `self` lives on `grid` (same node count and step).
    pub fn check_grid(&self, grid: &TimeGrid) -> Result<()> {
        let ok = self.fields.len() == grid.n_nodes() && (self.dt - grid.dt()).abs() <= 1e-12 * grid.dt();
        if ok {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "trajectory has {} nodes with dt = {}, grid has {} nodes with dt = {}",
                self.fields.len(),
                self.dt,
                grid.n_nodes(),
                grid.dt()
            )))
        }
    }

    pub fn check_compatible(&self, other: &Trajectory) -> Result<()> {
        if self.fields.len() != other.fields.len() || (self.dt - other.dt).abs() > 1e-12 * self.dt {
            return Err(Error::GridMismatch(format!(
                "{} nodes / dt {} vs {} nodes / dt {}",
                self.fields.len(),
                self.dt,
                other.fields.len(),
                other.dt
            )));
        }
        if !self.fields[0].same_basis(&other.fields[0]) {
            return Err(Error::BasisMismatch);
        }
        Ok(())
    }

    fn trapezoid(&self, f: impl Fn(&SpectralField) -> f64) -> f64 {
        let n = self.fields.len();
        if n == 1 {
            return 0.0;
        }
        let inner: f64 = self.fields[1..n - 1].iter().map(&f).sum();
        self.dt * (inner + 0.5 * (f(&self.fields[0]) + f(&self.fields[n - 1])))
    }

    /// `sup_n |u(t_n)|²_H`.
    pub fn sup_h_sq(&self) -> f64 {
        self.fields.iter().map(|f| f.h_norm_sq()).fold(0.0, f64::max)
    }

    /// Trapezoid estimate of `∫ ‖u‖²_V dt`.
    pub fn integral_v_sq(&self) -> f64 {
        self.trapezoid(|f| f.v_norm_sq())
    }

    /// `self - other`, node by node.
    pub fn difference(&self, other: &Trajectory) -> Result<Trajectory> {
        self.check_compatible(other)?;
        let fields = self.fields.iter().zip(&other.fields).map(|(a, b)| a - b).collect();
        Ok(Self { t0: self.t0, dt: self.dt, fields })
    }

    /// `sup_n |self(t_n) - other(t_n)|_H`.
    pub fn sup_gap(&self, other: &Trajectory) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self.fields.iter().zip(&other.fields).map(|(a, b)| (a - b).h_norm()).fold(0.0, f64::max))
    }

    pub fn scaled(&self, alpha: f64) -> Trajectory {
        Self { t0: self.t0, dt: self.dt, fields: self.fields.iter().map(|f| f.scaled(alpha)).collect() }
    }
}
