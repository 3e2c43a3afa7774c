use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SpectralField;

/// Uniform grid `t_n = n T / n_steps`, `n = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if n_steps < 1 {
            return Err(Error::InvalidParameter("time grid needs at least one step".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { horizon, n_steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt()
    }

    /// Trapezoid weights on the nodes; they sum to `T`. This is the quadrature
    /// of every time integral in the crate, including `L²(ϑ_T)`.
    pub fn weight(&self, n: usize) -> f64 {
        if n == 0 || n == self.n_steps {
            0.5 * self.dt()
        } else {
            self.dt()
        }
    }

    /// Grid with `factor` times as many steps over the same horizon.
    pub fn refined(&self, factor: usize) -> Self {
        Self { horizon: self.horizon, n_steps: self.n_steps * factor.max(1) }
    }
}

/// Deterministic body force `f(t)`.
#[derive(Debug, Clone)]
pub enum Force {
    Zero,
    Steady(SpectralField),
    /// `field · cos(ω t)`.
    Oscillating { field: SpectralField, omega: f64 },
    /// One field per node of a specific grid.
    Sampled(Vec<SpectralField>),
}

impl Force {
    /// `f(t_n)`; `None` means identically zero.
    pub fn at(&self, n: usize, t: f64) -> Option<SpectralField> {
        match self {
            Force::Zero => None,
            Force::Steady(f) => Some(f.clone()),
            Force::Oscillating { field, omega } => Some(field.scaled((omega * t).cos())),
            Force::Sampled(v) => Some(v[n].clone()),
        }
    }

    pub(crate) fn check(&self, grid: &TimeGrid) -> Result<()> {
        if let Force::Sampled(v) = self {
            if v.len() != grid.n_nodes() {
                return Err(Error::GridMismatch(format!(
                    "force has {} samples, grid has {} nodes",
                    v.len(),
                    grid.n_nodes()
                )));
            }
        }
        Ok(())
    }

    /// Trapezoid estimate of `∫₀ᵀ ‖f‖²_{V'} dt`, with `‖f‖²_{V'} = L² Σ |c_k|²/|κ|²`.
    pub fn dual_norm_sq_integral(&self, grid: &TimeGrid) -> f64 {
        (0..grid.n_nodes())
            .map(|n| {
                self.at(n, grid.time(n))
                    .map(|f| {
                        let b = f.basis();
                        let s: f64 = f
                            .coeffs()
                            .iter()
                            .enumerate()
                            .map(|(i, c)| c.norm_sqr() / b.wavenumber_sq(i))
                            .sum();
                        b.area() * s
                    })
                    .unwrap_or(0.0)
                    * grid.weight(n)
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_horizon() {
        let g = TimeGrid::new(1.7, 13).unwrap();
        let s: f64 = (0..g.n_nodes()).map(|n| g.weight(n)).sum();
        assert!((s - 1.7).abs() < 1e-14);
        assert_eq!(g.refined(2).n_steps(), 26);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(TimeGrid::new(1.0, 0).is_err());
        assert!(TimeGrid::new(0.0, 4).is_err());
    }
}
