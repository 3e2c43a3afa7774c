use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::dynamics::TimeGrid;
use crate::error::{Error, Result};
use crate::noise::{ControlField, MarkSpace};

/// Default refusal threshold on the expected number of events per run.
pub const DEFAULT_EVENT_CAP: f64 = 1e7;

/// One atom of a counting measure on `[0, T] × X`, optionally with its auxiliary `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    pub t: f64,
    pub mark: usize,
    pub y: f64,
    pub r: Option<f64>,
}

/// Events ordered by time.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpStream {
    horizon: f64,
    r_max: Option<f64>,
    events: Vec<JumpEvent>,
}

impl JumpStream {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn r_max(&self) -> Option<f64> {
        self.r_max
    }

    pub fn events(&self) -> &[JumpEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Event counts per atom.
    pub fn counts(&self, n_marks: usize) -> Vec<u64> {
        let mut c = vec![0; n_marks];
        for e in &self.events {
            c[e.mark] += 1;
        }
        c
    }

    /// Events in `[t0, t1) × {mark}`.
    pub fn count_in(&self, mark: usize, t0: f64, t1: f64) -> usize {
        self.events.iter().filter(|e| e.mark == mark && e.t >= t0 && e.t < t1).count()
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,mark_index,r")?;
        for e in &self.events {
            match e.r {
                Some(r) => writeln!(w, "{},{},{}", e.t, e.mark, r)?,
                None => writeln!(w, "{},{},", e.t, e.mark)?,
            }
        }
        Ok(())
    }
}

/// Draws from `Poisson(lambda)`, with `lambda = 0` giving `0`.
pub fn poisson_count<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("finite positive mean").sample(rng) as u64
}

/// Samples a Poisson random measure with intensity `θ ϑ_T` on `[0, T] × X`.
pub fn sample_prm<R: Rng + ?Sized>(theta: f64, marks: &MarkSpace, grid: &TimeGrid, rng: &mut R) -> Result<JumpStream> {
    sample_prm_with_cap(theta, marks, grid, None, DEFAULT_EVENT_CAP, rng)
}

/// Samples the PRM with intensity `θ ϑ_T ⊗ Leb[0, r_max]`, attaching `r` to each event.
pub fn sample_prm_marked<R: Rng + ?Sized>(
    theta: f64,
    r_max: f64,
    marks: &MarkSpace,
    grid: &TimeGrid,
    rng: &mut R,
) -> Result<JumpStream> {
    sample_prm_with_cap(theta, marks, grid, Some(r_max), DEFAULT_EVENT_CAP, rng)
}

pub fn sample_prm_with_cap<R: Rng + ?Sized>(
    theta: f64,
    marks: &MarkSpace,
    grid: &TimeGrid,
    r_max: Option<f64>,
    cap: f64,
    rng: &mut R,
) -> Result<JumpStream> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::InvalidParameter(format!("intensity must be positive, got {theta}")));
    }
    if let Some(r) = r_max {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("r_max must be positive, got {r}")));
        }
    }
    let horizon = grid.horizon();
    let scale = theta * horizon * r_max.unwrap_or(1.0);
    let expected = scale * marks.total_mass();
    if expected > cap {
        return Err(Error::EventBudget { expected, cap });
    }
    let mut events = Vec::new();
    let mut push = |rng: &mut R, mark: usize, y: f64| {
        let t = rng.random::<f64>() * horizon;
        let r = r_max.map(|rm| rng.random::<f64>() * rm);
        events.push(JumpEvent { t, mark, y, r });
    };
    match marks {
        MarkSpace::Finite { positions, weights } => {
            for (i, (y, w)) in positions.iter().zip(weights).enumerate() {
                let k = poisson_count(rng, scale * w);
                for _ in 0..k {
                    push(rng, i, *y);
                }
            }
        }
        MarkSpace::Continuous { density, bound, mass } => {
            let k = poisson_count(rng, scale * mass);
            for _ in 0..k {
                let y = loop {
                    let y: f64 = rng.random();
                    if rng.random::<f64>() * bound <= density(y) {
                        break y;
                    }
                };
                push(rng, 0, y);
            }
        }
    }
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(JumpStream { horizon, r_max, events })
}

/// Keeps `(t, y_i, r)` iff `r <= φ(y_i, t)`, with `φ` read at the grid node at or left of `t`.
pub fn thin_to_control(base: &JumpStream, phi: &ControlField, grid: &TimeGrid) -> Result<JumpStream> {
    let phi = phi.to_phi()?;
    let r_max = base
        .r_max
        .ok_or_else(|| Error::InvalidParameter("thinning needs a stream sampled with auxiliary r".into()))?;
    let phi_max = phi.max();
    if r_max < phi_max {
        return Err(Error::ThinningBound { r_max, phi_max });
    }
    if phi.n_nodes() != grid.n_nodes() {
        return Err(Error::GridMismatch(format!(
            "control has {} nodes, grid has {}",
            phi.n_nodes(),
            grid.n_nodes()
        )));
    }
    let dt = grid.dt();
    let last = grid.n_steps().saturating_sub(1);
    let mut events = Vec::new();
    for e in &base.events {
        if e.mark >= phi.n_marks() {
            return Err(Error::InvalidParameter(format!("event mark {} outside the control", e.mark)));
        }
        let node = ((e.t / dt).floor() as usize).min(last);
        let r = e.r.expect("marked stream");
        if r <= phi.value(e.mark, node) {
            events.push(*e);
        }
    }
    Ok(JumpStream { horizon: base.horizon, r_max: base.r_max, events })
}
