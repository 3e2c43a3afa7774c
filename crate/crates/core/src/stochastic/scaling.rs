use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_GAMMA: f64 = 0.4;

/// Noise level `ε` and deviation scale `a(ε) = ε^γ` with `0 < γ < ½`,
/// so that `a(ε) → 0` and `ε / a(ε)² = ε^{1-2γ} → 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingSpec {
    eps: f64,
    gamma: f64,
}

impl ScalingSpec {
    pub fn new(eps: f64, gamma: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidParameter(format!("eps must lie in (0, 1], got {eps}")));
        }
        if !(gamma > 0.0 && 1.0 - 2.0 * gamma > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma must lie in (0, 1/2), got {gamma}")));
        }
        Ok(Self { eps, gamma })
    }

    pub fn with_default_gamma(eps: f64) -> Result<Self> {
        Self::new(eps, DEFAULT_GAMMA)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `a(ε)`.
    pub fn a(&self) -> f64 {
        self.eps.powf(self.gamma)
    }

    /// `ε / a(ε)²`.
    pub fn noise_ratio(&self) -> f64 {
        self.eps.powf(1.0 - 2.0 * self.gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range() {
        assert!(ScalingSpec::new(0.0, 0.4).is_err());
        assert!(ScalingSpec::new(1.5, 0.4).is_err());
        assert!(ScalingSpec::new(0.1, 0.5).is_err());
        assert!(ScalingSpec::new(0.1, 0.0).is_err());
    }

    #[test]
    fn both_scales_vanish() {
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for k in 1..8 {
            let s = ScalingSpec::with_default_gamma(10f64.powi(-k)).unwrap();
            assert!((s.noise_ratio() - s.eps() / (s.a() * s.a())).abs() < 1e-12 * s.noise_ratio());
            assert!(s.a() < prev.0 && s.noise_ratio() < prev.1);
            prev = (s.a(), s.noise_ratio());
        }
    }
}
