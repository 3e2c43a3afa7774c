use rand::Rng;

use crate::dynamics::{check_initial, check_state, nse_rhs, Etd2, SolverOptions, TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::noise::{control_class_check, poisson_count, ControlField, ControlKind, NoiseModel, DEFAULT_EVENT_CAP};
use crate::seed::ReplicaSeed;
use crate::spectral::SpectralField;
use crate::stochastic::ScalingSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StochasticOptions {
    pub solver: SolverOptions,
    /// Refusal threshold on the expected number of base events.
    pub event_cap: f64,
    /// Height of the base stream; defaults to `max(1, max φ)`.
    pub r_max: Option<f64>,
    /// When set, controls with `L_T(φ) > M a(ε)²` are refused.
    pub class_bound: Option<f64>,
}

impl Default for StochasticOptions {
    fn default() -> Self {
        Self { solver: SolverOptions::default(), event_cap: DEFAULT_EVENT_CAP, r_max: None, class_bound: None }
    }
}

/// Simulates `u^ε` with jumps of size `εG(u(t-), y_i)` at rate `ε⁻¹ϑ_i`, compensated.
pub fn simulate_u_eps(
    scaling: &ScalingSpec,
    u0: &SpectralField,
    noise: &NoiseModel,
    grid: &TimeGrid,
    seed: ReplicaSeed,
) -> Result<Trajectory> {
    simulate_u_eps_with(scaling, u0, noise, grid, seed, &StochasticOptions::default())
}

pub fn simulate_u_eps_with(
    scaling: &ScalingSpec,
    u0: &SpectralField,
    noise: &NoiseModel,
    grid: &TimeGrid,
    seed: ReplicaSeed,
    opts: &StochasticOptions,
) -> Result<Trajectory> {
    let mut fields = Vec::with_capacity(grid.n_nodes());
    drive(scaling, u0, noise, None, grid, &mut seed.rng(), opts, |_, x| fields.push(x.clone()))?;
    Ok(Trajectory::from_parts(0.0, grid.dt(), fields))
}

/// Simulates `X^ε` driven by the thinned measure with intensity `ε⁻¹φ` plus the
/// drift `Σ_i G(X, y_i)(φ_i - 1)ϑ_i`. A `ψ`-valued control is converted with `a(ε)`.
pub fn simulate_controlled_x(
    scaling: &ScalingSpec,
    u0: &SpectralField,
    noise: &NoiseModel,
    phi: &ControlField,
    grid: &TimeGrid,
    seed: ReplicaSeed,
) -> Result<Trajectory> {
    simulate_controlled_x_with(scaling, u0, noise, phi, grid, seed, &StochasticOptions::default())
}

pub fn simulate_controlled_x_with(
    scaling: &ScalingSpec,
    u0: &SpectralField,
    noise: &NoiseModel,
    phi: &ControlField,
    grid: &TimeGrid,
    seed: ReplicaSeed,
    opts: &StochasticOptions,
) -> Result<Trajectory> {
    let mut fields = Vec::with_capacity(grid.n_nodes());
    drive(scaling, u0, noise, Some(phi), grid, &mut seed.rng(), opts, |_, x| fields.push(x.clone()))?;
    Ok(Trajectory::from_parts(0.0, grid.dt(), fields))
}

/// Runs the controlled dynamics and hands each node's state to `observe`
/// without storing the trajectory.
#[allow(clippy::too_many_arguments)]
pub fn stream_controlled_x<R: Rng + ?Sized>(
    scaling: &ScalingSpec,
    u0: &SpectralField,
    noise: &NoiseModel,
    phi: Option<&ControlField>,
    grid: &TimeGrid,
    rng: &mut R,
    opts: &StochasticOptions,
    observe: impl FnMut(usize, &SpectralField),
) -> Result<()> {
    drive(scaling, u0, noise, phi, grid, rng, opts, observe)
}

fn as_phi(phi: &ControlField, scaling: &ScalingSpec) -> Result<ControlField> {
    let a = scaling.a();
    match (phi.kind(), phi.scale()) {
        (ControlKind::Psi, None) => phi.clone().with_scale(a).to_phi(),
        (_, Some(s)) if (s - a).abs() > 1e-12 * a => Err(Error::InvalidParameter(format!(
            "control carries a(eps) = {s}, the scaling gives {a}"
        ))),
        _ => phi.to_phi(),
    }
}

#[allow(clippy::too_many_arguments)]
fn drive<R: Rng + ?Sized>(
    scaling: &ScalingSpec,
    u0: &SpectralField,
    noise: &NoiseModel,
    phi: Option<&ControlField>,
    grid: &TimeGrid,
    rng: &mut R,
    opts: &StochasticOptions,
    mut observe: impl FnMut(usize, &SpectralField),
) -> Result<()> {
    let force = noise.force();
    force.check(grid)?;
    check_initial(u0, grid, &opts.solver)?;
    let weights = noise.marks().weights();
    let m = weights.len();
    let phi = match phi {
        Some(p) => {
            p.check_shape(m, grid)?;
            let p = as_phi(p, scaling)?;
            if let Some(bound) = opts.class_bound {
                if !control_class_check(&p, bound, scaling.a(), weights, grid)? {
                    return Err(Error::InvalidParameter(format!(
                        "control lies outside the class with M = {bound}"
                    )));
                }
            }
            Some(p)
        }
        None => None,
    };
    let phi_at = |i: usize, n: usize| phi.as_ref().map_or(1.0, |p| p.value(i, n));
    let phi_max = phi.as_ref().map_or(1.0, |p| p.max());
    let r_max = opts.r_max.unwrap_or(phi_max.max(1.0));
    if r_max < phi_max {
        return Err(Error::ThinningBound { r_max, phi_max });
    }
    let eps = scaling.eps();
    let dt = grid.dt();
    let active = !noise.is_zero();
    if active {
        let expected = r_max * noise.marks().total_mass() * grid.horizon() / eps;
        if expected > opts.event_cap {
            return Err(Error::EventBudget { expected, cap: opts.event_cap });
        }
    }
    let controlled = active && phi.is_some();
    let rhs = |y: &SpectralField, k: usize| -> Result<SpectralField> {
        let mut f = nse_rhs(y, force, k, grid.time(k))?;
        if controlled {
            for (i, w) in weights.iter().enumerate() {
                let d = (phi_at(i, k) - 1.0) * w;
                if d != 0.0 {
                    if let Some(g) = noise.coefficient(y, i) {
                        f.axpy(d, &g);
                    }
                }
            }
        }
        Ok(f)
    };

    let etd = Etd2::new(u0.basis(), dt);
    let base_rate = r_max * dt / eps;
    let mut x = u0.clone();
    observe(0, &x);
    for n in 0..grid.n_steps() {
        let f0 = rhs(&x, n)?;
        let mut next = etd.step(&x, &f0, |a| rhs(a, n + 1))?;
        if active {
            for (i, w) in weights.iter().enumerate() {
                let k = poisson_count(rng, base_rate * w);
                let p = phi_at(i, n);
                let kept = if p >= r_max {
                    k
                } else {
                    (0..k).filter(|_| rng.random::<f64>() * r_max <= p).count() as u64
                };
                let coef = eps * kept as f64 - p * w * dt;
                if coef != 0.0 {
                    if let Some(g) = noise.coefficient(&x, i) {
                        next.axpy(coef, &g);
                    }
                }
            }
        }
        check_state(&next, n + 1, opts.solver.blowup)?;
        x = next;
        observe(n + 1, &x);
    }
    Ok(())
}

/// `Y^ε = (x - u⁰) / a(ε)`.
pub fn moderate_process(x: &Trajectory, u0: &Trajectory, scaling: &ScalingSpec) -> Result<Trajectory> {
    Ok(x.difference(u0)?.scaled(1.0 / scaling.a()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{solve_nse, Force};
    use crate::noise::{Coefficient, MarkSpace};
    use crate::spectral::Basis;
    use crate::stats::mean_se;
    use num_complex::Complex64;
    use std::sync::Arc;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn setup(coupling: f64) -> (Arc<Basis>, SpectralField, NoiseModel, TimeGrid) {
        let b = Basis::new(3, 0.1).unwrap();
        let u0 = SpectralField::from_modes(&b, &[([1, 0], c(0.6, 0.0)), ([1, 2], c(0.1, -0.2))]).unwrap();
        let g0 = SpectralField::from_modes(&b, &[([0, 1], c(0.5, 0.1))]).unwrap();
        let g1 = SpectralField::from_modes(&b, &[([2, 1], c(0.0, 0.3)), ([1, 1], c(0.2, 0.0))]).unwrap();
        let marks = MarkSpace::finite(vec![0.3, 0.7], vec![1.0, 0.5]).unwrap();
        let coeff = Coefficient::affine(vec![g0, g1], vec![1.0, 0.8], coupling, 2).unwrap();
        let force = Force::Steady(SpectralField::from_modes(&b, &[([1, 1], c(0.05, 0.0))]).unwrap());
        let noise = NoiseModel::new(marks, coeff, force).unwrap();
        (b, u0, noise, TimeGrid::new(1.0, 32).unwrap())
    }

    #[test]
    fn zero_coefficient_reproduces_the_deterministic_solver() {
        let (_, u0, noise, grid) = setup(0.0);
        let force = noise.force().clone();
        let zero = NoiseModel::new(noise.marks().clone(), Coefficient::Zero, force.clone()).unwrap();
        let det = solve_nse(&u0, &force, &grid).unwrap();
        let s = ScalingSpec::new(0.01, 0.4).unwrap();
        assert_eq!(simulate_u_eps(&s, &u0, &zero, &grid, ReplicaSeed::new(1, 0)).unwrap(), det);
        let phi = ControlField::from_fn_psi(2, &grid, |i, t| t + i as f64);
        assert_eq!(simulate_controlled_x(&s, &u0, &zero, &phi, &grid, ReplicaSeed::new(1, 0)).unwrap(), det);
    }

    #[test]
    fn unit_control_is_bitwise_the_uncontrolled_run() {
        let (_, u0, noise, grid) = setup(0.4);
        let s = ScalingSpec::new(0.05, 0.4).unwrap();
        let seed = ReplicaSeed::new(5, 2);
        let u = simulate_u_eps(&s, &u0, &noise, &grid, seed).unwrap();
        let x = simulate_controlled_x(&s, &u0, &noise, &ControlField::unit_phi(2, grid.n_nodes()), &grid, seed).unwrap();
        assert_eq!(u, x);
        let zero_psi = ControlField::zeros_psi(2, grid.n_nodes());
        assert_eq!(u, simulate_controlled_x(&s, &u0, &noise, &zero_psi, &grid, seed).unwrap());
        let other = simulate_u_eps(&s, &u0, &noise, &grid, ReplicaSeed::new(5, 3)).unwrap();
        assert_ne!(u, other);
        assert_eq!(u, simulate_u_eps(&s, &u0, &noise, &grid, seed).unwrap());
    }

    #[test]
    fn compensated_noise_has_the_deterministic_mean() {
        // a single shear mode stays a steady Euler flow, so the dynamics are linear
        let b = Basis::new(2, 0.2).unwrap();
        let u0 = SpectralField::from_modes(&b, &[([1, 0], c(0.4, 0.1))]).unwrap();
        let g = SpectralField::from_modes(&b, &[([1, 0], c(1.0, -0.5))]).unwrap();
        let marks = MarkSpace::finite(vec![0.5], vec![2.0]).unwrap();
        let noise = NoiseModel::new(marks, Coefficient::constant(vec![g], vec![1.0]).unwrap(), Force::Zero).unwrap();
        let grid = TimeGrid::new(1.0, 16).unwrap();
        let s = ScalingSpec::new(0.1, 0.4).unwrap();
        let det = solve_nse(&u0, &Force::Zero, &grid).unwrap();
        let idx = b.index_of([1, 0]).unwrap();
        let reps = 4000;
        let (re, im): (Vec<f64>, Vec<f64>) = (0..reps)
            .map(|r| {
                let t = simulate_u_eps(&s, &u0, &noise, &grid, ReplicaSeed::new(31, r)).unwrap();
                let z = t.terminal().coeffs()[idx];
                (z.re, z.im)
            })
            .unzip();
        let want = det.terminal().coeffs()[idx];
        let (m_re, se_re) = mean_se(&re);
        let (m_im, se_im) = mean_se(&im);
        assert!((m_re - want.re).abs() < 3.0 * se_re, "{m_re} vs {} ({se_re})", want.re);
        assert!((m_im - want.im).abs() < 3.0 * se_im, "{m_im} vs {} ({se_im})", want.im);
    }

    #[test]
    fn refusals() {
        let (_, u0, noise, grid) = setup(0.0);
        let s = ScalingSpec::new(1e-6, 0.4).unwrap();
        let opts = StochasticOptions { event_cap: 1e5, ..Default::default() };
        assert!(matches!(
            simulate_u_eps_with(&s, &u0, &noise, &grid, ReplicaSeed::new(0, 0), &opts),
            Err(Error::EventBudget { .. })
        ));
        let s = ScalingSpec::new(0.1, 0.4).unwrap();
        let phi = ControlField::from_fn_phi(2, &grid, |_, _| 3.0).unwrap();
        let opts = StochasticOptions { r_max: Some(2.0), ..Default::default() };
        assert!(matches!(
            simulate_controlled_x_with(&s, &u0, &noise, &phi, &grid, ReplicaSeed::new(0, 0), &opts),
            Err(Error::ThinningBound { .. })
        ));
        let opts = StochasticOptions { class_bound: Some(0.1), ..Default::default() };
        assert!(simulate_controlled_x_with(&s, &u0, &noise, &phi, &grid, ReplicaSeed::new(0, 0), &opts).is_err());
        let wrong = ControlField::zeros_psi(2, grid.n_nodes()).with_scale(0.7);
        assert!(simulate_controlled_x(&s, &u0, &noise, &wrong, &grid, ReplicaSeed::new(0, 0)).is_err());
    }

    #[test]
    fn moderate_process_is_linear_in_the_gap() {
        let (b, u0, noise, grid) = setup(0.0);
        let det = solve_nse(&u0, noise.force(), &grid).unwrap();
        let s = ScalingSpec::new(0.01, 0.4).unwrap();
        let y = moderate_process(&det, &det, &s).unwrap();
        assert!(y.fields().iter().all(|f| f.max_abs_coeff() == 0.0));
        let bump = SpectralField::from_modes(&b, &[([0, 1], c(1.0, 0.0))]).unwrap();
        let shifted = Trajectory::new(0.0, grid.dt(), det.fields().iter().map(|f| f + &bump).collect()).unwrap();
        let y = moderate_process(&shifted, &det, &s).unwrap();
        let bigger = Trajectory::new(0.0, grid.dt(), det.fields().iter().map(|f| f + &bump.scaled(2.0)).collect()).unwrap();
        let y2 = moderate_process(&bigger, &det, &s).unwrap();
        for (a, b2) in y.fields().iter().zip(y2.fields()) {
            assert!((&a.scaled(2.0) - b2).max_abs_coeff() < 1e-9 * b2.max_abs_coeff());
            assert!((a.h_norm() - bump.h_norm() / s.a()).abs() < 1e-9 * a.h_norm());
        }
        let short = Trajectory::new(0.0, grid.dt(), det.fields()[..5].to_vec()).unwrap();
        assert!(moderate_process(&short, &det, &s).is_err());
    }
}
