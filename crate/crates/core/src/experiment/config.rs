//! Experiment configuration: a sectioned TOML file with every key checked.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{Force, TimeGrid};
use crate::error::{Error, Result};
use crate::noise::{Coefficient, ControlField, MarkSpace, NoiseModel, DEFAULT_EVENT_CAP};
use crate::spectral::{Basis, SpectralField, MIN_DEALIAS_FACTOR};
use crate::stochastic::{ScalingSpec, DEFAULT_GAMMA};

/// A mode entry `[k1, k2, re, im]`.
pub type ModeEntry = [f64; 4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub basis: BasisSection,
    pub grid: GridSection,
    pub noise: NoiseSection,
    #[serde(default)]
    pub force: ForceSection,
    #[serde(default)]
    pub initial: InitialSection,
    pub scaling: ScalingSection,
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub control: ControlSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default)]
    pub estimates: EstimatesSection,
    #[serde(default)]
    pub oscillation: OscillationSection,
    #[serde(default)]
    pub tail: TailSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn two_pi() -> f64 {
    2.0 * PI
}
fn dealias() -> f64 {
    MIN_DEALIAS_FACTOR
}
fn gamma() -> f64 {
    DEFAULT_GAMMA
}
fn event_cap() -> f64 {
    DEFAULT_EVENT_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSection {
    pub n: usize,
    pub nu: f64,
    #[serde(default = "two_pi")]
    pub length: f64,
    #[serde(default = "dealias")]
    pub dealias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub horizon: f64,
    pub n_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkSection {
    pub weight: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub position: Option<f64>,
    /// Modes of the base field `g_i`.
    pub base: Vec<ModeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// `c` in `G(x, y_i) = h_i (g_i + c P_{≤m} x)`.
    #[serde(default)]
    pub coupling: f64,
    /// `m` in `P_{≤m}`.
    #[serde(default)]
    pub cutoff: usize,
    /// Rescale every `g_i` to unit H-norm.
    #[serde(default)]
    pub normalize: bool,
    /// Replace the coefficient by `G ≡ 0` (marks are kept).
    #[serde(default)]
    pub zero: bool,
    pub marks: Vec<MarkSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ForceKind {
    #[default]
    Zero,
    Steady,
    Oscillating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ForceSection {
    #[serde(default)]
    pub kind: ForceKind,
    #[serde(default)]
    pub modes: Vec<ModeEntry>,
    #[serde(default)]
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub modes: Vec<ModeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSection {
    #[serde(default = "gamma")]
    pub gamma: f64,
    pub eps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub replicas: u64,
    pub seed: u64,
    #[serde(default = "event_cap")]
    pub event_cap: f64,
}

/// `ψ(y_i, t) = amplitudes[i] · cos(frequency · t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    #[serde(default)]
    pub amplitudes: Vec<f64>,
    #[serde(default)]
    pub frequency: f64,
    /// `M` of the admissible class; when set, controls are class-checked.
    #[serde(default)]
    pub class_bound: Option<f64>,
    /// Also run the uncontrolled reference `ψ = 0` where an experiment supports it.
    #[serde(default)]
    pub zero_reference: bool,
}

macro_rules! defaults {
    ($name:ident { $($field:ident : $ty:ty = $val:expr),* $(,)? }) => {
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields, default)]
        pub struct $name { $(pub $field: $ty),* }
        impl Default for $name {
            fn default() -> Self { Self { $($field: $val),* } }
        }
    };
}

defaults!(ToleranceSection {
    identities: f64 = 1e-10,
    stokes: f64 = 1e-12,
    order_low: f64 = 1.7,
    order_high: f64 = 2.3,
    rate_tol: f64 = 1e-8,
    rate_max_iter: usize = 500,
    tikhonov: f64 = 0.0,
    trend_sigma: f64 = 2.0,
    tail_factor: f64 = 1.5,
    oscillation_ratio: f64 = 0.1,
});

defaults!(EstimatesSection {
    samples: usize = 10_000,
    n: usize = 8,
    stokes_samples: usize = 1_000,
    energy_steps: usize = 64,
});

defaults!(OscillationSection {
    n_steps: usize = 8192,
    eps: Vec<f64> = vec![1e-1, 1e-2, 1e-3],
    amplitudes: Vec<f64> = Vec::new(),
});

defaults!(TailSection {
    radius: f64 = 1.0,
    replicas: u64 = 100_000,
    eps: Vec<f64> = vec![1e-2, 1e-3, 1e-4],
    directions: usize = 32,
});

defaults!(OutputSection {
    dir: String = "results".to_string(),
});

fn strictly_decreasing(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Config(format!("{name} must not be empty")));
    }
    if v.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Config(format!("{name} must be strictly decreasing, got {v:?}")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Checks every component-level invariant by building the objects.
    pub fn validate(&self) -> Result<()> {
        let basis = self.basis()?;
        self.time_grid()?;
        self.noise_model(&basis)?;
        self.initial_state(&basis)?;
        strictly_decreasing("scaling.eps", &self.scaling.eps)?;
        strictly_decreasing("oscillation.eps", &self.oscillation.eps)?;
        strictly_decreasing("tail.eps", &self.tail.eps)?;
        for &e in self.scaling.eps.iter().chain(&self.tail.eps).chain(&self.oscillation.eps) {
            ScalingSpec::new(e, self.scaling.gamma)?;
        }
        if self.ensemble.replicas < 1 || self.tail.replicas < 1 {
            return Err(Error::Config("replica counts must be at least 1".into()));
        }
        let m = self.noise.marks.len();
        for (name, v) in [("control.amplitudes", &self.control.amplitudes), ("oscillation.amplitudes", &self.oscillation.amplitudes)] {
            if !v.is_empty() && v.len() != m {
                return Err(Error::Config(format!("{name} needs {m} entries, got {}", v.len())));
            }
        }
        if !(self.tail.radius > 0.0) {
            return Err(Error::Config("tail.radius must be positive".into()));
        }
        if self.oscillation.n_steps == 0 || self.estimates.energy_steps == 0 {
            return Err(Error::Config("step counts must be positive".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON echo of the config.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serialises");
        hex::encode(Sha256::digest(canon.as_bytes()))
    }

    pub fn basis(&self) -> Result<Arc<Basis>> {
        let b = &self.basis;
        Basis::with_options(b.n, b.length, b.nu, b.dealias)
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.grid.horizon, self.grid.n_steps)
    }

    pub fn fine_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.grid.horizon, self.oscillation.n_steps)
    }

    pub fn field(basis: &Arc<Basis>, modes: &[ModeEntry]) -> Result<SpectralField> {
        let mut list = Vec::with_capacity(modes.len());
        for m in modes {
            if m[0].fract() != 0.0 || m[1].fract() != 0.0 {
                return Err(Error::Config(format!("mode indices must be integers, got {m:?}")));
            }
            list.push(([m[0] as i64, m[1] as i64], Complex64::new(m[2], m[3])));
        }
        SpectralField::from_modes(basis, &list).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn force(&self, basis: &Arc<Basis>) -> Result<Force> {
        let f = &self.force;
        Ok(match f.kind {
            ForceKind::Zero => Force::Zero,
            ForceKind::Steady => Force::Steady(Self::field(basis, &f.modes)?),
            ForceKind::Oscillating => Force::Oscillating { field: Self::field(basis, &f.modes)?, omega: f.omega },
        })
    }

    pub fn initial_state(&self, basis: &Arc<Basis>) -> Result<SpectralField> {
        Self::field(basis, &self.initial.modes)
    }

    pub fn noise_model(&self, basis: &Arc<Basis>) -> Result<NoiseModel> {
        let n = &self.noise;
        if n.marks.is_empty() {
            return Err(Error::Config("noise.marks must not be empty".into()));
        }
        let m = n.marks.len();
        let positions = n.marks.iter().enumerate().map(|(i, k)| k.position.unwrap_or((i as f64 + 0.5) / m as f64)).collect();
        let weights = n.marks.iter().map(|k| k.weight).collect();
        let marks = MarkSpace::finite(positions, weights)?;
        let coeff = if n.zero {
            Coefficient::Zero
        } else {
            let mut bases = Vec::with_capacity(m);
            for k in &n.marks {
                let g = Self::field(basis, &k.base)?;
                bases.push(if n.normalize && g.h_norm() > 0.0 { g.scaled(1.0 / g.h_norm()) } else { g });
            }
            Coefficient::affine(bases, n.marks.iter().map(|k| k.amplitude).collect(), n.coupling, n.cutoff)?
        };
        NoiseModel::new(marks, coeff, self.force(basis)?)
    }

    /// The configured bounded control `ψ`.
    pub fn control(&self, grid: &TimeGrid) -> ControlField {
        let amps = &self.control.amplitudes;
        let w = self.control.frequency;
        let m = self.noise.marks.len();
        ControlField::from_fn_psi(m, grid, |i, t| if amps.is_empty() { 0.0 } else { amps[i] * (w * t).cos() })
    }

    pub fn scalings(&self, eps: &[f64]) -> Result<Vec<ScalingSpec>> {
        eps.iter().map(|&e| ScalingSpec::new(e, self.scaling.gamma)).collect()
    }
}

#[cfg(test)]
pub(crate) fn minimal_config() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(tests::MINIMAL).expect("minimal config")
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(super) const MINIMAL: &str = r#"
[basis]
n = 2
nu = 0.1

[grid]
horizon = 1.0
n_steps = 8

[noise]
coupling = 0.1
cutoff = 1
[[noise.marks]]
weight = 1.0
amplitude = 0.5
base = [[1, 0, 0.3, 0.0]]

[scaling]
eps = [0.1, 0.01]

[ensemble]
replicas = 4
seed = 7
"#;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.scaling.gamma, 0.4);
        assert_eq!(c.tolerances.tail_factor, 1.5);
        assert_eq!(c.estimates.samples, 10_000);
        assert_eq!(c.basis.length, 2.0 * PI);
        let b = c.basis().unwrap();
        assert_eq!(c.noise_model(&b).unwrap().marks().len(), 1);
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn round_trips_through_toml() {
        let c = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(c, back);
        assert_eq!(c.hash(), back.hash());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let typo = MINIMAL.replace("coupling", "couplnig");
        assert!(matches!(ExperimentConfig::from_toml_str(&typo), Err(Error::Config(_))));
        let up = MINIMAL.replace("eps = [0.1, 0.01]", "eps = [0.01, 0.1]");
        assert!(ExperimentConfig::from_toml_str(&up).is_err());
        let zero = MINIMAL.replace("replicas = 4", "replicas = 0");
        assert!(ExperimentConfig::from_toml_str(&zero).is_err());
        let mode = MINIMAL.replace("[[1, 0, 0.3, 0.0]]", "[[5, 0, 0.3, 0.0]]");
        assert!(ExperimentConfig::from_toml_str(&mode).is_err());
        let gamma = MINIMAL.replace("[scaling]", "[scaling]\ngamma = 0.5");
        assert!(ExperimentConfig::from_toml_str(&gamma).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let mut b = a.clone();
        b.ensemble.seed = 8;
        assert_ne!(a.hash(), b.hash());
    }
}
