use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::noise::ControlField;
use crate::rate::SkeletonOperator;
use crate::seed::ReplicaSeed;
use crate::spectral::SpectralField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateOptions {
    /// Stop once `|Λψ - target|_H <= tol · |target|_H`.
    pub tol: f64,
    pub max_iter: usize,
    /// Tikhonov weight `μ` added to `ΛΛ*`.
    pub mu: f64,
    /// Retry with this `μ` if the unregularised solve stalls.
    pub fallback_mu: Option<f64>,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 500, mu: 0.0, fallback_mu: None }
    }
}

/// Least-norm control hitting a terminal state.
#[derive(Debug, Clone, Serialize)]
pub struct RateResult {
    /// `½‖ψ*‖²_{L²(ϑ_T)}`.
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(skip)]
    pub psi_star: ControlField,
    /// `|Λψ* - target|_H`.
    pub residual: f64,
    pub relative_residual: f64,
    pub iterations: usize,
    /// Set when a Tikhonov term was active.
    pub regularized: bool,
}

impl RateResult {
    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn write_psi_csv<W: Write>(&self, w: W) -> Result<()> {
        Ok(self.psi_star.write_csv(w)?)
    }
}

fn finish(op: &SkeletonOperator, w: &SpectralField, target: &SpectralField, iterations: usize, mu: f64) -> Result<RateResult> {
    let psi = op.apply_adjoint(w)?;
    let hit = op.apply_forward(&psi)?;
    let residual = (&hit - target).h_norm();
    let scale = target.h_norm();
    Ok(RateResult {
        i: 0.5 * op.control_inner(&psi, &psi),
        psi_star: psi,
        residual,
        relative_residual: if scale > 0.0 { residual / scale } else { residual },
        iterations,
        regularized: mu != 0.0,
    })
}

/// CG gives up once the residual has not dropped by 1% over this many iterations,
/// which is what an inconsistent (out-of-range) target looks like.
const STALL_WINDOW: usize = 25;

fn cg(op: &SkeletonOperator, target: &SpectralField, opts: &RateOptions, mu: f64) -> Result<RateResult> {
    let basis = target.basis();
    let scale = target.h_norm();
    let mut w = SpectralField::zeros(basis);
    if scale == 0.0 {
        return finish(op, &w, target, 0, mu);
    }
    let mut r = target.clone();
    let mut p = r.clone();
    let mut rs = r.h_norm_sq();
    let mut best = (rs, 0);
    let mut iterations = opts.max_iter;
    for it in 1..=opts.max_iter {
        let q = op.apply_normal(&p, mu)?;
        let pq = p.inner_h_unchecked(&q);
        if !(pq > 0.0) {
            iterations = it;
            break;
        }
        let alpha = rs / pq;
        w.axpy(alpha, &p);
        r.axpy(-alpha, &q);
        let rs_new = r.h_norm_sq();
        if rs_new.sqrt() <= opts.tol * scale {
            let res = finish(op, &w, target, it, mu)?;
            if res.relative_residual <= opts.tol || mu != 0.0 {
                return Ok(res);
            }
            // recursive residual drifted; restart from the true one
            r = op.normal_gradient(target, &w, mu)?.scaled(-1.0);
            p = r.clone();
            rs = r.h_norm_sq();
            continue;
        }
        if rs_new < 0.98 * best.0 {
            best = (rs_new, it);
        } else if it - best.1 >= STALL_WINDOW {
            iterations = it;
            break;
        }
        p = {
            let mut next = r.clone();
            next.axpy(rs_new / rs, &p);
            next
        };
        rs = rs_new;
    }
    Err(Error::NotConverged(Box::new(finish(op, &w, target, iterations, mu)?)))
}

/// `I(target) = min ½‖ψ‖²_{L²(ϑ_T)}` subject to `Λψ = target`, by conjugate
/// gradients on `ΛΛ*w = target` with `ψ* = Λ*w`.
pub fn rate_terminal(op: &SkeletonOperator, target: &SpectralField, opts: &RateOptions) -> Result<RateResult> {
    if !target.same_basis(op.base().get(0)) {
        return Err(Error::BasisMismatch);
    }
    match cg(op, target, opts, opts.mu) {
        Err(Error::NotConverged(best)) => match opts.fallback_mu {
            Some(mu) if opts.mu == 0.0 => cg(op, target, opts, mu).map_err(|_| Error::NotConverged(best)),
            _ => Err(Error::NotConverged(best)),
        },
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSetOptions {
    pub random_directions: usize,
    pub seed: u64,
    pub power_iterations: usize,
    pub rate: RateOptions,
}

impl Default for LevelSetOptions {
    fn default() -> Self {
        Self { random_directions: 32, seed: 0, power_iterations: 60, rate: RateOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct LevelSetResult {
    /// `r² min_d I(d)` over the candidate unit directions.
    pub i_min: f64,
    pub direction: SpectralField,
    /// `I` of the minimising direction at unit radius.
    pub unit_rate: f64,
    pub candidates: usize,
    /// Candidates outside the range of `Λ` (rate `+∞`).
    pub unreachable: usize,
}

/// Unit directions: the real and imaginary direction of every mode pair.
pub fn mode_directions(basis: &std::sync::Arc<crate::spectral::Basis>) -> Vec<SpectralField> {
    let mut out = Vec::new();
    for idx in basis.half_modes() {
        let k = basis.modes()[idx];
        for c in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
            let f = SpectralField::from_modes(basis, &[(k, c)]).expect("mode in basis");
            out.push(f.scaled(1.0 / f.h_norm()));
        }
    }
    out
}

/// Leading eigenvector of `ΛΛ*` by power iteration, normalised in H.
pub fn top_normal_direction<R: Rng + ?Sized>(op: &SkeletonOperator, iterations: usize, rng: &mut R) -> Result<SpectralField> {
    let basis = op.base().basis();
    let mut v = SpectralField::random(basis, rng);
    v.scale_mut(1.0 / v.h_norm());
    for _ in 0..iterations {
        let nv = op.apply_normal(&v, 0.0)?;
        let norm = nv.h_norm();
        if norm == 0.0 {
            break;
        }
        v = nv.scaled(1.0 / norm);
    }
    Ok(v)
}

/// Approximates `inf{I(η): |η|_H >= radius}` by `radius² min_d I(d)` over unit directions.
/// Directions the solver cannot reach count as `I = +∞`; if none is reachable the
/// best stalled iterate is returned as the error.
pub fn rate_level_set(op: &SkeletonOperator, radius: f64, opts: &LevelSetOptions) -> Result<LevelSetResult> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("radius must be nonnegative, got {radius}")));
    }
    let basis = op.base().basis();
    let mut rng = ReplicaSeed::new(opts.seed, 0).rng();
    let mut dirs = mode_directions(basis);
    for _ in 0..opts.random_directions {
        let f = SpectralField::random(basis, &mut rng);
        dirs.push(f.scaled(1.0 / f.h_norm()));
    }
    if opts.power_iterations > 0 {
        dirs.push(top_normal_direction(op, opts.power_iterations, &mut rng)?);
    }
    let outcomes: Vec<Result<f64>> = dirs.par_iter().map(|d| rate_terminal(op, d, &opts.rate).map(|r| r.i)).collect();
    let mut rates = Vec::with_capacity(outcomes.len());
    let mut stalled = None;
    for o in outcomes {
        match o {
            Ok(i) => rates.push(i),
            Err(Error::NotConverged(best)) => {
                rates.push(f64::INFINITY);
                stalled.get_or_insert(best);
            }
            Err(e) => return Err(e),
        }
    }
    let unreachable = rates.iter().filter(|r| r.is_infinite()).count();
    let (best, unit_rate) = rates
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, v)| (k, *v))
        .expect("at least one direction");
    if unit_rate.is_infinite() {
        return Err(Error::NotConverged(stalled.expect("a stalled candidate")));
    }
    Ok(LevelSetResult {
        i_min: radius * radius * unit_rate,
        direction: dirs[best].clone(),
        unit_rate,
        candidates: dirs.len(),
        unreachable,
    })
}
