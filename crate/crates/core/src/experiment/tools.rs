//! Single-run commands: one sample path, one skeleton solve, one rate computation.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

use crate::dynamics::{read_snapshot, solve_nse, solve_skeleton, write_snapshot};
use crate::error::{Error, Result};
use crate::experiment::ExperimentConfig;
use crate::noise::sample_prm_with_cap;
use crate::rate::{rate_level_set, rate_terminal, LevelSetOptions, RateOptions, SkeletonOperator};
use crate::seed::ReplicaSeed;
use crate::stochastic::{simulate_u_eps_with, trajectory_diagnostics, ScalingSpec, StochasticOptions};

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(create(dir, name)?, value).map_err(|e| Error::Format(e.to_string()))
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    config_hash: String,
    seed: u64,
    eps: f64,
    a_eps: f64,
    jumps_sampled: usize,
    diagnostics: &'a std::collections::BTreeMap<String, f64>,
}

/// Simulates one path of `u^ε` at the first configured ε and writes `u_eps.bin`,
/// `u0.bin`, `diagnostics.json` and a sample of the driving measure in `jumps.csv`.
pub fn run_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let basis = cfg.basis()?;
    let grid = cfg.time_grid()?;
    let noise = cfg.noise_model(&basis)?;
    let scaling = ScalingSpec::new(cfg.scaling.eps[0], cfg.scaling.gamma)?;
    let u0 = solve_nse(&cfg.initial_state(&basis)?, noise.force(), &grid)?;
    let opts = StochasticOptions { event_cap: cfg.ensemble.event_cap, ..Default::default() };
    let seed = cfg.ensemble.seed;
    let u = simulate_u_eps_with(&scaling, u0.get(0), &noise, &grid, ReplicaSeed::new(seed, 0), &opts)?;
    write_snapshot(&u, create(out, "u_eps.bin")?)?;
    write_snapshot(&u0, create(out, "u0.bin")?)?;
    let jumps = sample_prm_with_cap(
        1.0 / scaling.eps(),
        noise.marks(),
        &grid,
        None,
        cfg.ensemble.event_cap,
        &mut ReplicaSeed::new(seed, u64::MAX).rng(),
    )?;
    jumps.write_csv(create(out, "jumps.csv")?)?;
    let diagnostics = trajectory_diagnostics(&u, Some(&u0))?;
    write_json(
        out,
        "diagnostics.json",
        &SimulateSummary {
            config_hash: cfg.hash(),
            seed,
            eps: scaling.eps(),
            a_eps: scaling.a(),
            jumps_sampled: jumps.len(),
            diagnostics: &diagnostics,
        },
    )
}

/// Solves the skeleton equation for the configured control; writes `eta.bin`, `u0.bin` and `psi.csv`.
pub fn run_skeleton(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let basis = cfg.basis()?;
    let grid = cfg.time_grid()?;
    let noise = cfg.noise_model(&basis)?;
    let u0 = solve_nse(&cfg.initial_state(&basis)?, noise.force(), &grid)?;
    let psi = cfg.control(&grid);
    let eta = solve_skeleton(&psi, &u0, &noise, &grid)?;
    write_snapshot(&eta, create(out, "eta.bin")?)?;
    write_snapshot(&u0, create(out, "u0.bin")?)?;
    psi.write_csv(create(out, "psi.csv")?)?;
    Ok(())
}

pub fn rate_options(cfg: &ExperimentConfig) -> RateOptions {
    let t = &cfg.tolerances;
    RateOptions { tol: t.rate_tol, max_iter: t.rate_max_iter, mu: 0.0, fallback_mu: (t.tikhonov > 0.0).then_some(t.tikhonov) }
}

#[derive(Serialize)]
struct LevelSetSummary {
    radius: f64,
    i_min: f64,
    unit_rate: f64,
    candidates: usize,
    direction: Vec<f64>,
}

/// Computes `I` of the terminal state of the snapshot at `target`; writes `rate.json`
/// and `psi_star.csv`, and `level_set.json` when a radius is given. A stalled
/// solve still writes its best iterate before the error is returned.
pub fn run_rate(cfg: &ExperimentConfig, target: &Path, radius: Option<f64>, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let basis = cfg.basis()?;
    let grid = cfg.time_grid()?;
    let noise = cfg.noise_model(&basis)?;
    let snap = read_snapshot(File::open(target)?, Some(&basis))?;
    let u0 = solve_nse(&cfg.initial_state(&basis)?, noise.force(), &grid)?;
    let op = SkeletonOperator::new(u0, noise, grid)?;
    let opts = rate_options(cfg);
    let outcome = rate_terminal(&op, snap.terminal(), &opts);
    let result = match &outcome {
        Ok(r) => r,
        Err(Error::NotConverged(best)) => best.as_ref(),
        Err(_) => return outcome.map(|_| ()),
    };
    result.write_json(create(out, "rate.json")?)?;
    result.write_psi_csv(create(out, "psi_star.csv")?)?;
    outcome?;
    if let Some(r) = radius {
        let level = rate_level_set(
            &op,
            r,
            &LevelSetOptions { random_directions: cfg.tail.directions, seed: cfg.ensemble.seed, rate: opts, ..Default::default() },
        )?;
        write_json(
            out,
            "level_set.json",
            &LevelSetSummary {
                radius: r,
                i_min: level.i_min,
                unit_rate: level.unit_rate,
                candidates: level.candidates,
                direction: level.direction.to_real_vec(),
            },
        )?;
    }
    Ok(())
}
