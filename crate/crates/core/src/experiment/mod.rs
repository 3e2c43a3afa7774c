//! Configuration, ε-sweeps and persistence of the verification experiments.

pub mod config;
mod convergence;
mod estimates;
mod records;
mod report;
mod tail;
mod tools;

use std::path::Path;

pub use config::ExperimentConfig;
pub use convergence::{run_skeleton_continuity, run_moderate_limit, run_controlled_convergence, Z95};
pub use estimates::{energy_orders, fitted_order, run_verify_core, triple_ratios, TripleRatios};
pub use records::{decreasing_within, ExperimentRecord, MetricRow, Verdict, CSV_HEADER};
pub use report::{report_data, IndexEntry, ReportIndex};
pub use tail::{run_tail_exponent, tail_trend, TailPoint};
pub use tools::{rate_options, run_rate, run_simulate, run_skeleton};

use crate::error::{Error, Result};

/// Names accepted by [`run_experiment`].
pub const EXPERIMENTS: [&str; 5] = ["verify_core", "thm35", "prop33", "prop36", "mdp_tail"];

pub fn run_experiment(name: &str, cfg: &ExperimentConfig) -> Result<ExperimentRecord> {
    match name {
        "verify_core" => run_verify_core(cfg),
        "thm35" => run_controlled_convergence(cfg),
        "prop33" => run_skeleton_continuity(cfg),
        "prop36" => run_moderate_limit(cfg),
        "mdp_tail" => run_tail_exponent(cfg),
        other => Err(Error::Config(format!("unknown experiment {other}"))),
    }
}

/// Runs an experiment and persists its CSV and manifest under `out`.
pub fn run_and_persist(name: &str, cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentRecord> {
    let rec = run_experiment(name, cfg)?;
    rec.persist(out, cfg)?;
    Ok(rec)
}

/// Sizes the global worker pool from `NSE_MDP_THREADS`, if set. Returns the thread count in use.
pub fn configure_threads() -> Result<usize> {
    if let Ok(v) = std::env::var("NSE_MDP_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Config(format!("NSE_MDP_THREADS must be a positive integer, got {v:?}")))?;
        // a pool built earlier in the process stays in place
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(rayon::current_num_threads())
}
