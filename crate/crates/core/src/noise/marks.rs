use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type Density = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Mark space `X` with its measure `ϑ`.
#[derive(Clone)]
pub enum MarkSpace {
    /// Atoms `y_i` with weights `ϑ_i > 0`.
    Finite { positions: Vec<f64>, weights: Vec<f64> },
    /// `[0, 1]` with a bounded density; sampled by rejection against `bound`.
    Continuous { density: Density, bound: f64, mass: f64 },
}

impl fmt::Debug for MarkSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarkSpace::Finite { positions, weights } => {
                f.debug_struct("Finite").field("positions", positions).field("weights", weights).finish()
            }
            MarkSpace::Continuous { bound, mass, .. } => {
                f.debug_struct("Continuous").field("bound", bound).field("mass", mass).finish()
            }
        }
    }
}

impl MarkSpace {
    pub fn finite(positions: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if positions.len() != weights.len() {
            return Err(Error::InvalidParameter(format!(
                "{} mark positions but {} weights",
                positions.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter(format!("mark weights must be positive, got {w}")));
        }
        Ok(MarkSpace::Finite { positions, weights })
    }

    /// Equally spaced atoms in `(0, 1)`.
    pub fn uniform_atoms(weights: Vec<f64>) -> Result<Self> {
        let m = weights.len();
        let positions = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
        Self::finite(positions, weights)
    }

    /// `density` must be non-negative and bounded by `bound` on `[0, 1]`.
    pub fn continuous(density: impl Fn(f64) -> f64 + Send + Sync + 'static, bound: f64) -> Result<Self> {
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::InvalidParameter(format!("density bound must be positive, got {bound}")));
        }
        let cells = 20_000;
        let mut mass = 0.0;
        for j in 0..cells {
            let y = (j as f64 + 0.5) / cells as f64;
            let d = density(y);
            if !(d >= 0.0 && d <= bound) {
                return Err(Error::InvalidParameter(format!(
                    "density value {d} at {y} outside [0, {bound}]"
                )));
            }
            mass += d / cells as f64;
        }
        Ok(MarkSpace::Continuous { density: Arc::new(density), bound, mass })
    }

    /// Number of atoms; zero for a continuous space.
    pub fn len(&self) -> usize {
        match self {
            MarkSpace::Finite { weights, .. } => weights.len(),
            MarkSpace::Continuous { .. } => 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.total_mass() == 0.0
    }

    /// Atom weights `ϑ_i`; empty for a continuous space.
    pub fn weights(&self) -> &[f64] {
        match self {
            MarkSpace::Finite { weights, .. } => weights,
            MarkSpace::Continuous { .. } => &[],
        }
    }

    pub fn positions(&self) -> &[f64] {
        match self {
            MarkSpace::Finite { positions, .. } => positions,
            MarkSpace::Continuous { .. } => &[],
        }
    }

    /// `ϑ(X)`.
    pub fn total_mass(&self) -> f64 {
        match self {
            MarkSpace::Finite { weights, .. } => weights.iter().sum(),
            MarkSpace::Continuous { mass, .. } => *mass,
        }
    }

    pub fn is_finite_kind(&self) -> bool {
        matches!(self, MarkSpace::Finite { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_weights() {
        assert!(MarkSpace::finite(vec![0.1], vec![0.0]).is_err());
        assert!(MarkSpace::finite(vec![0.1, 0.2], vec![1.0]).is_err());
        let m = MarkSpace::uniform_atoms(vec![1.0, 2.0]).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.total_mass(), 3.0);
        assert_eq!(m.positions(), &[0.25, 0.75]);
    }

    #[test]
    fn continuous_mass_by_quadrature() {
        let m = MarkSpace::continuous(|y| 2.0 * y, 2.0).unwrap();
        assert!((m.total_mass() - 1.0).abs() < 1e-9);
        assert!(MarkSpace::continuous(|y| 3.0 * y, 2.0).is_err());
    }
}
