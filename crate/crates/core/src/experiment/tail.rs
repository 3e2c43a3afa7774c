//! Tail exponents `ℓ(ε) = -(ε/a²) log P(|Y^ε(T)|_H ≥ r)` against the minimal rate on the level set.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::solve_nse;
use crate::error::Result;
use crate::experiment::convergence::Z95;
use crate::experiment::{ExperimentConfig, ExperimentRecord, MetricRow, Verdict};
use crate::rate::{rate_level_set, LevelSetOptions, RateOptions, SkeletonOperator};
use crate::seed::ReplicaSeed;
use crate::spectral::SpectralField;
use crate::stats::wilson_interval;
use crate::stochastic::{stream_controlled_x, StochasticOptions};

/// One ε of the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailPoint {
    pub eps: f64,
    pub a_eps: f64,
    pub replicas: u64,
    pub hits: u64,
    pub p_hat: f64,
    /// `ε / a(ε)²`.
    pub speed: f64,
    /// `ℓ(ε)`; for zero hits the lower bound from the Wilson upper limit.
    pub ell: f64,
    pub ell_sd: f64,
    pub censored: bool,
}

impl TailPoint {
    pub fn new(eps: f64, a_eps: f64, replicas: u64, hits: u64) -> Self {
        let speed = eps / (a_eps * a_eps);
        let p = hits as f64 / replicas as f64;
        let (_, p_high) = wilson_interval(hits, replicas, Z95);
        let censored = hits == 0;
        let ell = if censored { -speed * p_high.ln() } else { -speed * p.ln() };
        let ell_sd = if censored { 0.0 } else { speed * ((1.0 - p) / (replicas as f64 * p)).sqrt() };
        Self { eps, a_eps, replicas, hits, p_hat: p, speed, ell, ell_sd, censored }
    }

    /// `(ℓ_low, ℓ_high)` from the Wilson interval of `p̂`.
    pub fn ell_interval(&self) -> (f64, f64) {
        let (lo, hi) = wilson_interval(self.hits, self.replicas, Z95);
        let lo = if self.censored { 0.0 } else { lo };
        (-self.speed * hi.ln(), -self.speed * lo.ln())
    }
}

/// `ℓ_{k+1} ≤ ℓ_k + σ·sqrt(sd_k² + sd_{k+1}²)` along the sweep, censored points excluded.
pub fn tail_trend(points: &[TailPoint], sigmas: f64) -> bool {
    let live: Vec<&TailPoint> = points.iter().filter(|p| !p.censored).collect();
    live.len() >= 2
        && live.windows(2).all(|w| w[1].ell <= w[0].ell + sigmas * (w[0].ell_sd.powi(2) + w[1].ell_sd.powi(2)).sqrt())
}

pub fn run_tail_exponent(cfg: &ExperimentConfig) -> Result<ExperimentRecord> {
    let start = std::time::Instant::now();
    let mut rec = ExperimentRecord::new("mdp_tail", cfg);
    let tail = &cfg.tail;
    let tol = &cfg.tolerances;
    let basis = cfg.basis()?;
    let grid = cfg.time_grid()?;
    let noise = cfg.noise_model(&basis)?;
    let u0 = solve_nse(&cfg.initial_state(&basis)?, noise.force(), &grid)?;
    let radius = tail.radius;
    let opts = StochasticOptions { event_cap: cfg.ensemble.event_cap, ..Default::default() };
    let terminal_ref = u0.terminal();
    let last = grid.n_steps();

    let mut points = Vec::new();
    for (k, scaling) in cfg.scalings(&tail.eps)?.iter().enumerate() {
        let threshold = radius * scaling.a();
        let hits: Vec<bool> = (0..tail.replicas)
            .into_par_iter()
            .map(|r| {
                let mut rng = ReplicaSeed::new(cfg.ensemble.seed, k as u64 * tail.replicas + r).rng();
                let mut end: Option<SpectralField> = None;
                stream_controlled_x(scaling, u0.get(0), &noise, None, &grid, &mut rng, &opts, |n, x| {
                    if n == last {
                        end = Some(x.clone());
                    }
                })?;
                let end = end.expect("terminal state observed");
                Ok((&end - terminal_ref).h_norm() >= threshold)
            })
            .collect::<Result<_>>()?;
        let count = hits.iter().filter(|h| **h).count() as u64;
        points.push(TailPoint::new(scaling.eps(), scaling.a(), tail.replicas, count));
    }

    let op = SkeletonOperator::new(u0.clone(), noise.clone(), grid)?;
    let level = rate_level_set(
        &op,
        radius,
        &LevelSetOptions {
            random_directions: tail.directions,
            seed: cfg.ensemble.seed,
            rate: RateOptions {
                tol: tol.rate_tol,
                max_iter: tol.rate_max_iter,
                mu: 0.0,
                fallback_mu: (tol.tikhonov > 0.0).then_some(tol.tikhonov),
            },
            ..Default::default()
        },
    )?;
    let i_min = level.i_min;

    let trend = tail_trend(&points, tol.trend_sigma);
    for p in &points {
        let (plo, phi) = wilson_interval(p.hits, p.replicas, Z95);
        rec.push(MetricRow::new("tail_probability", p.replicas, p.p_hat, Verdict::Info).at(p.eps, p.a_eps).ci(plo, phi));
        let (lo, hi) = p.ell_interval();
        let name = if p.censored { "ell_censored" } else { "ell" };
        let mut row = MetricRow::new(name, p.replicas, p.ell, Verdict::from_bool(trend)).at(p.eps, p.a_eps);
        row.ci_low = Some(lo);
        row.ci_high = hi.is_finite().then_some(hi);
        if p.censored {
            row.verdict = Verdict::Info;
        }
        rec.push(row);
    }
    rec.push(MetricRow::new("i_min", 0, i_min, Verdict::Info));
    let end = points.last().expect("nonempty sweep");
    let factor = end.ell / i_min;
    let factor_ok = !end.censored && i_min > 0.0 && factor.abs() <= tol.tail_factor;
    rec.push(MetricRow::new("ell_over_i_min", end.replicas, factor, Verdict::from_bool(factor_ok)).at(end.eps, end.a_eps));

    rec.detail("points", &points);
    rec.detail("trend_passed", trend);
    rec.detail("factor_passed", factor_ok);
    rec.detail("radius", radius);
    rec.detail("unit_rate", level.unit_rate);
    rec.detail("level_set_candidates", level.candidates);
    rec.detail("level_set_unreachable", level.unreachable);
    rec.detail("level_set_direction", level.direction.to_real_vec());
    rec.settle();
    rec.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(rec)
}
