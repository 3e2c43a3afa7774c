use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::seed::ReplicaSeed;

/// Diagnostics of one replica, tagged with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub seed: u64,
    pub replica: u64,
    pub diagnostics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub max: f64,
}

pub type MomentTable = BTreeMap<String, Moments>;

/// `sup_t |u|²`, `∫‖u‖²`, `|u(T)|`, and `sup_t |u - reference|²` when a reference is given.
pub fn trajectory_diagnostics(traj: &Trajectory, reference: Option<&Trajectory>) -> Result<BTreeMap<String, f64>> {
    let mut d = BTreeMap::new();
    d.insert("sup_h_sq".to_string(), traj.sup_h_sq());
    d.insert("int_v_sq".to_string(), traj.integral_v_sq());
    d.insert("terminal_h".to_string(), traj.terminal().h_norm());
    if let Some(r) = reference {
        let gap = traj.sup_gap(r)?;
        d.insert("sup_gap_sq".to_string(), gap * gap);
    }
    Ok(d)
}

/// Mean, variance and max per diagnostic. Values are sorted before reduction,
/// so the table does not depend on the order of `runs`.
pub fn ensemble_stats(runs: &[RunRecord]) -> Result<MomentTable> {
    if runs.len() < 2 {
        return Err(Error::InvalidParameter(format!("ensemble needs at least 2 runs, got {}", runs.len())));
    }
    let hash = &runs[0].config_hash;
    if let Some(r) = runs.iter().find(|r| &r.config_hash != hash) {
        return Err(Error::HashMismatch(hash.clone(), r.config_hash.clone()));
    }
    let mut columns: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in runs {
        for (k, v) in &r.diagnostics {
            columns.entry(k.as_str()).or_default().push(*v);
        }
    }
    let mut table = MomentTable::new();
    for (k, mut vals) in columns {
        vals.sort_by(f64::total_cmp);
        let n = vals.len();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let variance = if n > 1 { vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        table.insert(k.to_string(), Moments { count: n, mean, variance, max: vals[n - 1] });
    }
    Ok(table)
}

/// Runs `f` for replicas `0..replicas` in parallel; results come back in replica order.
pub fn run_replicas<T, F>(seed: u64, replicas: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(ReplicaSeed) -> Result<T> + Sync,
{
    (0..replicas).into_par_iter().map(|r| f(ReplicaSeed::new(seed, r))).collect()
}
