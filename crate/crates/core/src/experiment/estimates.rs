//! The core property suite: trilinear identities and inequalities on random
//! fields, the Stokes identity, the energy-balance convergence order and the
//! growth conditions of the noise coefficient.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{energy_balance_residual, solve_nse, TimeGrid};
use crate::error::Result;
use crate::experiment::{ExperimentConfig, ExperimentRecord, MetricRow, Verdict};
use crate::seed::ReplicaSeed;
use crate::spectral::{apply_stokes, nonlinear_b, Basis, SpectralField};

/// Per-triple ratios; every field is a ratio against its bound or scale.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TripleRatios {
    pub antisymmetry: f64,
    pub cancellation: f64,
    pub trilinear: f64,
    pub young: f64,
    pub monotonicity: f64,
    pub ladyzhenskaya: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Evaluates the identities and inequalities on one triple.
pub fn triple_ratios(u: &SpectralField, v: &SpectralField, w: &SpectralField) -> Result<TripleRatios> {
    let buv = nonlinear_b(u, v)?;
    let buw = nonlinear_b(u, w)?;
    let buu = nonlinear_b(u, u)?;
    let bvv = nonlinear_b(v, v)?;
    let b_uvw = buv.inner_h(w)?;
    let b_uwv = buw.inner_h(v)?;
    let b_uvv = buv.inner_h(v)?;
    let b_uuv = buu.inner_h(v)?;

    let (hu, hv) = (u.h_norm(), v.h_norm());
    let (vu, vv, vw) = (u.v_norm(), v.v_norm(), w.v_norm());
    let l4v = v.l4_norm_pow4();

    let d = u - v;
    let mono = (&buu - &bvv).inner_h(&d)?.abs();
    let excess = (mono - 0.5 * d.v_norm_sq()).max(0.0);

    Ok(TripleRatios {
        antisymmetry: ratio((b_uvw + b_uwv).abs(), vu * vv * vw),
        cancellation: ratio(b_uvv.abs(), vu * vv * vv),
        trilinear: ratio(b_uvw.abs(), 2.0 * (vu * hu * vv * hv).sqrt() * vw),
        young: ratio(b_uuv.abs(), 0.5 * u.v_norm_sq() + 32.0 * l4v * u.h_norm_sq()),
        monotonicity: ratio(excess, d.h_norm_sq() * l4v),
        ladyzhenskaya: ratio(l4v, v.v_norm_sq() * v.h_norm_sq()),
    })
}

#[derive(Serialize)]
struct Witness {
    sample: usize,
    ratio: f64,
    u: Vec<f64>,
    v: Vec<f64>,
    w: Vec<f64>,
}

fn triple(basis: &Arc<Basis>, seed: u64, k: usize) -> [SpectralField; 3] {
    let mut rng = ReplicaSeed::new(seed, k as u64).rng();
    [
        SpectralField::random(basis, &mut rng),
        SpectralField::random(basis, &mut rng),
        SpectralField::random(basis, &mut rng),
    ]
}

/// Least-squares slope of `-log₂ r` against the halving level.
pub fn fitted_order(residuals: &[f64]) -> f64 {
    let n = residuals.len() as f64;
    let ys: Vec<f64> = residuals.iter().map(|r| -r.log2()).collect();
    let xm = (n - 1.0) / 2.0;
    let ym = ys.iter().sum::<f64>() / n;
    let (num, den) = ys.iter().enumerate().fold((0.0, 0.0), |(a, b), (k, y)| {
        let dx = k as f64 - xm;
        (a + dx * (y - ym), b + dx * dx)
    });
    num / den
}

/// Residuals and observed orders `log₂(r_k / r_{k+1})` of the energy balance under dt halvings.
pub fn energy_orders(cfg: &ExperimentConfig, levels: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let basis = cfg.basis()?;
    let u0 = cfg.initial_state(&basis)?;
    let force = cfg.force(&basis)?;
    let mut residuals = Vec::with_capacity(levels);
    for l in 0..levels {
        let grid = TimeGrid::new(cfg.grid.horizon, cfg.estimates.energy_steps << l)?;
        let tr = solve_nse(&u0, &force, &grid)?;
        residuals.push(energy_balance_residual(&tr, &force).abs());
    }
    let orders = residuals.windows(2).map(|r| (r[0] / r[1]).log2()).collect();
    Ok((residuals, orders))
}

pub fn run_verify_core(cfg: &ExperimentConfig) -> Result<ExperimentRecord> {
    let start = std::time::Instant::now();
    let tol = &cfg.tolerances;
    let est = &cfg.estimates;
    let mut rec = ExperimentRecord::new("verify_core", cfg);
    let basis = Basis::with_options(est.n, cfg.basis.length, cfg.basis.nu, cfg.basis.dealias)?;
    let seed = cfg.ensemble.seed;

    let ratios: Vec<TripleRatios> = (0..est.samples)
        .into_par_iter()
        .map(|k| {
            let [u, v, w] = triple(&basis, seed, k);
            triple_ratios(&u, &v, &w)
        })
        .collect::<Result<_>>()?;
    let n = est.samples as u64;

    type Pick = fn(&TripleRatios) -> f64;
    let checks: [(&str, Pick, Option<f64>); 6] = [
        ("antisymmetry_max", |r| r.antisymmetry, Some(tol.identities)),
        ("cancellation_max", |r| r.cancellation, Some(tol.identities)),
        ("trilinear_bound_ratio_max", |r| r.trilinear, Some(1.0)),
        ("young_bound_ratio_max", |r| r.young, Some(1.0)),
        ("monotonicity_constant_max", |r| r.monotonicity, None),
        ("ladyzhenskaya_ratio_max", |r| r.ladyzhenskaya, Some(1.0)),
    ];
    for (name, pick, bound) in checks {
        let (arg, max) = ratios
            .iter()
            .map(pick)
            .enumerate()
            .fold((0, 0.0f64), |acc, (k, x)| if x > acc.1 || x.is_nan() { (k, x) } else { acc });
        let verdict = match bound {
            Some(b) => Verdict::from_bool(max <= b),
            None => Verdict::Info,
        };
        if verdict == Verdict::Fail {
            let [u, v, w] = triple(&basis, seed, arg);
            rec.detail(
                &format!("witness_{name}"),
                Witness { sample: arg, ratio: max, u: u.to_real_vec(), v: v.to_real_vec(), w: w.to_real_vec() },
            );
        }
        rec.push(MetricRow::new(name, n, max, verdict));
    }

    let stokes = (0..est.stokes_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ReplicaSeed::new(seed ^ 0x5707_e5, k as u64).rng();
            let u = SpectralField::random(&basis, &mut rng);
            let lhs = apply_stokes(&u).inner_h(&u)?;
            let rhs = basis.nu() * u.v_norm_sq();
            Ok((lhs - rhs).abs() / rhs)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0f64, f64::max);
    rec.push(MetricRow::new(
        "stokes_relative_error_max",
        est.stokes_samples as u64,
        stokes,
        Verdict::from_bool(stokes <= tol.stokes),
    ));

    let (residuals, orders) = energy_orders(cfg, 3)?;
    for (l, r) in residuals.iter().enumerate() {
        rec.push(MetricRow::new(&format!("energy_residual_level{l}"), 1, *r, Verdict::Info));
    }
    for (l, o) in orders.iter().enumerate() {
        rec.push(MetricRow::new(&format!("energy_order_level{l}"), 1, *o, Verdict::Info));
    }
    let order = fitted_order(&residuals);
    let ok = (tol.order_low..=tol.order_high).contains(&order);
    rec.push(MetricRow::new("energy_order", residuals.len() as u64, order, Verdict::from_bool(ok)));

    let noise = cfg.noise_model(&cfg.basis()?)?;
    let report = noise.verify_condition_a(1000, &mut ReplicaSeed::new(seed, u64::MAX).rng())?;
    rec.push(MetricRow::new("condition_a_lipschitz_ratio_max", 1000, report.lipschitz_ratio_max, Verdict::from_bool(report.passed())));
    rec.push(MetricRow::new("condition_a_growth_ratio_max", 1000, report.growth_ratio_max, Verdict::from_bool(report.passed())));
    rec.detail("condition_b", &report.condition_b);

    rec.settle();
    rec.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(rec)
}
