use rand::Rng;

use crate::dynamics::Force;
use crate::error::{Error, Result};
use crate::noise::MarkSpace;
use crate::spectral::SpectralField;

/// Noise coefficient `G(x, y_i)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Zero,
    /// `G(x, y_i) = h_i (g_i + c P_{≤m} x)`.
    Affine { bases: Vec<SpectralField>, amplitudes: Vec<f64>, coupling: f64, cutoff: usize },
}

impl Coefficient {
    pub fn affine(bases: Vec<SpectralField>, amplitudes: Vec<f64>, coupling: f64, cutoff: usize) -> Result<Self> {
        if bases.len() != amplitudes.len() {
            return Err(Error::InvalidParameter(format!(
                "{} coefficient fields but {} amplitudes",
                bases.len(),
                amplitudes.len()
            )));
        }
        if bases.is_empty() {
            return Err(Error::InvalidParameter("affine coefficient needs at least one mark".into()));
        }
        if bases.iter().any(|g| !g.same_basis(&bases[0])) {
            return Err(Error::BasisMismatch);
        }
        if !coupling.is_finite() || amplitudes.iter().any(|h| !h.is_finite()) {
            return Err(Error::InvalidParameter("coefficient parameters must be finite".into()));
        }
        Ok(Coefficient::Affine { bases, amplitudes, coupling, cutoff })
    }

    /// `G(x, y_i) = h_i g_i`.
    pub fn constant(bases: Vec<SpectralField>, amplitudes: Vec<f64>) -> Result<Self> {
        Self::affine(bases, amplitudes, 0.0, 0)
    }

    fn n_marks(&self) -> Option<usize> {
        match self {
            Coefficient::Zero => None,
            Coefficient::Affine { bases, .. } => Some(bases.len()),
        }
    }

    /// `(L_G(y_i), M_G(y_i))` from the analytic affine bounds.
    fn analytic_bounds(&self, n_marks: usize) -> (Vec<f64>, Vec<f64>) {
        match self {
            Coefficient::Zero => (vec![0.0; n_marks], vec![0.0; n_marks]),
            Coefficient::Affine { bases, amplitudes, coupling, .. } => {
                let lip = amplitudes.iter().map(|h| coupling.abs() * h.abs()).collect();
                let growth = bases
                    .iter()
                    .zip(amplitudes)
                    .map(|(g, h)| h.abs() * g.h_norm().max(coupling.abs()))
                    .collect();
                (lip, growth)
            }
        }
    }
}

/// Marks, coefficient, declared Lipschitz and growth bounds, and the deterministic force.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    marks: MarkSpace,
    coefficient: Coefficient,
    lipschitz: Vec<f64>,
    growth: Vec<f64>,
    force: Force,
}

impl NoiseModel {
    pub fn new(marks: MarkSpace, coefficient: Coefficient, force: Force) -> Result<Self> {
        if !marks.is_finite_kind() {
            return Err(Error::InvalidParameter("the noise coefficient needs a finite mark space".into()));
        }
        if let Some(m) = coefficient.n_marks() {
            if m != marks.len() {
                return Err(Error::InvalidParameter(format!(
                    "coefficient has {m} marks, mark space has {}",
                    marks.len()
                )));
            }
        }
        let (lipschitz, growth) = coefficient.analytic_bounds(marks.len());
        Ok(Self { marks, coefficient, lipschitz, growth, force })
    }

    /// Replaces the declared `L_G` and `M_G`.
    pub fn with_declared_bounds(mut self, lipschitz: Vec<f64>, growth: Vec<f64>) -> Result<Self> {
        if lipschitz.len() != self.marks.len() || growth.len() != self.marks.len() {
            return Err(Error::InvalidParameter("declared bounds need one value per mark".into()));
        }
        if lipschitz.iter().chain(&growth).any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter("declared bounds must be nonnegative and finite".into()));
        }
        self.lipschitz = lipschitz;
        self.growth = growth;
        Ok(self)
    }

    pub fn marks(&self) -> &MarkSpace {
        &self.marks
    }

    pub fn force(&self) -> &Force {
        &self.force
    }

    pub fn coefficient_rule(&self) -> &Coefficient {
        &self.coefficient
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.coefficient, Coefficient::Zero)
    }

    pub fn lipschitz(&self) -> &[f64] {
        &self.lipschitz
    }

    pub fn growth(&self) -> &[f64] {
        &self.growth
    }

    /// `G(x, y_i)`; `None` when the coefficient vanishes identically.
    pub fn coefficient(&self, x: &SpectralField, i: usize) -> Option<SpectralField> {
        match &self.coefficient {
            Coefficient::Zero => None,
            Coefficient::Affine { bases, amplitudes, coupling, cutoff } => {
                let h = amplitudes[i];
                let mut out = bases[i].scaled(h);
                if *coupling != 0.0 {
                    out.axpy(h * coupling, &x.low_pass(*cutoff));
                }
                Some(out)
            }
        }
    }

    /// Samples state pairs and checks the declared Lipschitz and growth bounds mark by mark.
    pub fn verify_condition_a<R: Rng + ?Sized>(&self, n_samples: usize, rng: &mut R) -> Result<ConditionReport> {
        let basis = match &self.coefficient {
            Coefficient::Zero => None,
            Coefficient::Affine { bases, .. } => Some(bases[0].basis().clone()),
        };
        let weights = self.marks.weights();
        let mut report = ConditionReport {
            samples: n_samples,
            lipschitz_ratio_max: 0.0,
            growth_ratio_max: 0.0,
            lipschitz_l2: self.lipschitz.iter().zip(weights).map(|(l, w)| l * l * w).sum(),
            growth_l2: self.growth.iter().zip(weights).map(|(m, w)| m * m * w).sum(),
            condition_b: "holds automatically: the mark measure is finite".into(),
            violations: Vec::new(),
        };
        let Some(basis) = basis else {
            return Ok(report);
        };
        for sample in 0..n_samples {
            let x1 = SpectralField::random(&basis, rng);
            let x2 = SpectralField::random(&basis, rng);
            let gap = (&x1 - &x2).h_norm();
            let size = x1.h_norm();
            for i in 0..self.marks.len() {
                let g1 = self.coefficient(&x1, i).expect("affine coefficient");
                let g2 = self.coefficient(&x2, i).expect("affine coefficient");
                let lip = ratio((&g1 - &g2).h_norm(), self.lipschitz[i] * gap);
                let grow = ratio(g1.h_norm(), self.growth[i] * (1.0 + size));
                report.lipschitz_ratio_max = report.lipschitz_ratio_max.max(lip);
                report.growth_ratio_max = report.growth_ratio_max.max(grow);
                if lip > 1.0 + RATIO_SLACK {
                    report.violations.push(Violation { sample, mark: i, bound: BoundKind::Lipschitz, ratio: lip, x1_norm: size, x2_norm: x2.h_norm() });
                }
                if grow > 1.0 + RATIO_SLACK {
                    report.violations.push(Violation { sample, mark: i, bound: BoundKind::Growth, ratio: grow, x1_norm: size, x2_norm: x2.h_norm() });
                }
            }
        }
        Ok(report)
    }
}

const RATIO_SLACK: f64 = 1e-10;

fn ratio(observed: f64, bound: f64) -> f64 {
    if observed <= 1e-14 * (1.0 + bound) {
        0.0
    } else if bound == 0.0 {
        f64::INFINITY
    } else {
        observed / bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum BoundKind {
    Lipschitz,
    Growth,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Violation {
    pub sample: usize,
    pub mark: usize,
    pub bound: BoundKind,
    pub ratio: f64,
    pub x1_norm: f64,
    pub x2_norm: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ConditionReport {
    pub samples: usize,
    pub lipschitz_ratio_max: f64,
    pub growth_ratio_max: f64,
    /// `Σ_i L_G(y_i)² ϑ_i`.
    pub lipschitz_l2: f64,
    /// `Σ_i M_G(y_i)² ϑ_i`.
    pub growth_l2: f64,
    pub condition_b: String,
    pub violations: Vec<Violation>,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.lipschitz_l2.is_finite() && self.growth_l2.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::ReplicaSeed;
    use crate::spectral::Basis;
    use num_complex::Complex64;

    fn model(coupling: f64) -> NoiseModel {
        let b = Basis::new(4, 0.1).unwrap();
        let g0 = SpectralField::from_modes(&b, &[([1, 0], Complex64::new(0.5, 0.2))]).unwrap();
        let g1 = SpectralField::from_modes(&b, &[([1, 1], Complex64::new(0.0, 2.0)), ([0, 2], Complex64::new(0.3, 0.0))]).unwrap();
        let marks = MarkSpace::finite(vec![0.2, 0.8], vec![1.0, 0.25]).unwrap();
        NoiseModel::new(marks, Coefficient::affine(vec![g0, g1], vec![0.7, -1.5], coupling, 2).unwrap(), Force::Zero)
            .unwrap()
    }

    #[test]
    fn affine_passes() {
        let m = model(0.8);
        let r = m.verify_condition_a(200, &mut ReplicaSeed::new(1, 0).rng()).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.lipschitz_ratio_max <= 1.0 + RATIO_SLACK && r.lipschitz_ratio_max > 0.1, "{}", r.lipschitz_ratio_max);
        assert!(r.condition_b.contains("automatically"));
    }

    #[test]
    fn halved_lipschitz_fails_with_ratio_two() {
        let m = model(0.8);
        let lip: Vec<f64> = m.lipschitz().iter().map(|l| 0.5 * l).collect();
        let growth = m.growth().to_vec();
        let m = m.with_declared_bounds(lip, growth).unwrap();
        let r = m.verify_condition_a(200, &mut ReplicaSeed::new(2, 0).rng()).unwrap();
        assert!(!r.passed());
        assert!(r.violations.iter().all(|v| v.bound == BoundKind::Lipschitz));
        assert!((r.lipschitz_ratio_max - 2.0).abs() < 0.05, "{}", r.lipschitz_ratio_max);
    }

    #[test]
    fn constant_coefficient_has_zero_lipschitz() {
        let m = model(0.0);
        assert_eq!(m.lipschitz(), &[0.0, 0.0]);
        let r = m.verify_condition_a(50, &mut ReplicaSeed::new(3, 0).rng()).unwrap();
        assert!(r.passed());
        assert_eq!(r.lipschitz_ratio_max, 0.0);
    }

    #[test]
    fn zero_coefficient() {
        let marks = MarkSpace::finite(vec![0.5], vec![1.0]).unwrap();
        let m = NoiseModel::new(marks, Coefficient::Zero, Force::Zero).unwrap();
        assert!(m.is_zero());
        let b = Basis::new(2, 0.1).unwrap();
        assert!(m.coefficient(&SpectralField::zeros(&b), 0).is_none());
    }

    #[test]
    fn mismatched_marks_rejected() {
        let b = Basis::new(2, 0.1).unwrap();
        let marks = MarkSpace::finite(vec![0.5, 0.6], vec![1.0, 1.0]).unwrap();
        let coeff = Coefficient::constant(vec![SpectralField::zeros(&b)], vec![1.0]).unwrap();
        assert!(NoiseModel::new(marks, coeff, Force::Zero).is_err());
    }
}
