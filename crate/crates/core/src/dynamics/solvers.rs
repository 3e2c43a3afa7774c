use log::warn;

use crate::dynamics::{Force, TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::noise::{ControlField, NoiseModel};
use crate::spectral::{linearized_advection, nonlinear_b, Basis, SpectralField};

/// Guards for the explicit advection step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Initial states with `|u0|²_H` above this are rejected.
    pub energy_cap: f64,
    /// Any `|c_k|` above this aborts the run.
    pub blowup: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { energy_cap: 1e6, blowup: 1e8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkeletonOptions {
    /// Keep `-B(η, u⁰) - B(u⁰, η)`; switching it off leaves the mild solution of
    /// `dη = -Aη dt + source dt`.
    pub transport: bool,
}

impl Default for SkeletonOptions {
    fn default() -> Self {
        Self { transport: true }
    }
}

/// Per-mode ETD2RK weights for one step size.
#[derive(Debug, Clone)]
pub(crate) struct Etd2 {
    pub(crate) decay: Vec<f64>,
    pub(crate) p1: Vec<f64>,
    pub(crate) p2: Vec<f64>,
}

fn phi1(z: f64) -> f64 {
    if z < 1e-8 {
        1.0 - 0.5 * z
    } else {
        -(-z).exp_m1() / z
    }
}

fn phi2(z: f64) -> f64 {
    if z < 0.1 {
        // Σ_j (-z)^j / (j+2)!
        let mut term = 0.5;
        let mut sum = 0.5;
        for j in 1..12 {
            term *= -z / (j as f64 + 2.0);
            sum += term;
        }
        sum
    } else {
        ((-z).exp_m1() + z) / (z * z)
    }
}

impl Etd2 {
    pub(crate) fn new(basis: &Basis, dt: f64) -> Self {
        let n = basis.num_modes();
        let mut decay = Vec::with_capacity(n);
        let mut p1 = Vec::with_capacity(n);
        let mut p2 = Vec::with_capacity(n);
        for i in 0..n {
            let z = basis.stokes_eigenvalue(i) * dt;
            decay.push((-z).exp());
            p1.push(dt * phi1(z));
            p2.push(dt * phi2(z));
        }
        Self { decay, p1, p2 }
    }

    pub(crate) fn step(
        &self,
        x: &SpectralField,
        f0: &SpectralField,
        stage: impl FnOnce(&SpectralField) -> Result<SpectralField>,
    ) -> Result<SpectralField> {
        let mut a = x.map_diag(&self.decay);
        a.add_diag(&self.p1, f0);
        let fa = stage(&a)?;
        let mut out = a;
        out.add_diag(&self.p2, &(&fa - f0));
        Ok(out)
    }
}

/// `-B(u) + f(t_n)`.
pub(crate) fn nse_rhs(u: &SpectralField, force: &Force, n: usize, t: f64) -> Result<SpectralField> {
    let mut out = nonlinear_b(u, u)?;
    out.scale_mut(-1.0);
    if let Some(f) = force.at(n, t) {
        out.axpy(1.0, &f);
    }
    Ok(out)
}

pub(crate) fn check_initial(u0: &SpectralField, grid: &TimeGrid, opts: &SolverOptions) -> Result<()> {
    let energy = u0.h_norm_sq();
    if !(energy <= opts.energy_cap) {
        return Err(Error::EnergyCap { energy, cap: opts.energy_cap });
    }
    let phys = u0.to_physical();
    let vmax = phys.x.iter().zip(&phys.y).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max);
    let basis = u0.basis();
    let cfl = vmax * grid.dt() * basis.grid_size() as f64 / basis.length();
    if cfl > 1.0 {
        warn!("advective CFL number {cfl:.2} exceeds 1 at t = 0; the explicit step may be inaccurate");
    }
    Ok(())
}

pub(crate) fn check_state(u: &SpectralField, step: usize, blowup: f64) -> Result<()> {
    if !u.is_finite() || u.max_abs_coeff() > blowup {
        return Err(Error::Diverged { step });
    }
    Ok(())
}

/// Solves `du + Au dt + B(u) dt = f dt` from `u0` on `grid`.
pub fn solve_nse(u0: &SpectralField, force: &Force, grid: &TimeGrid) -> Result<Trajectory> {
    solve_nse_with(u0, force, grid, &SolverOptions::default())
}

pub fn solve_nse_with(u0: &SpectralField, force: &Force, grid: &TimeGrid, opts: &SolverOptions) -> Result<Trajectory> {
    force.check(grid)?;
    check_initial(u0, grid, opts)?;
    let etd = Etd2::new(u0.basis(), grid.dt());
    let mut fields = Vec::with_capacity(grid.n_nodes());
    fields.push(u0.clone());
    for n in 0..grid.n_steps() {
        let x = &fields[n];
        let f0 = nse_rhs(x, force, n, grid.time(n))?;
        let next = etd.step(x, &f0, |a| nse_rhs(a, force, n + 1, grid.time(n + 1)))?;
        check_state(&next, n + 1, opts.blowup)?;
        fields.push(next);
    }
    Ok(Trajectory::from_parts(0.0, grid.dt(), fields))
}

/// `Σ_i ψ(y_i, t_n) ϑ_i G(u⁰(t_n), y_i)`.
pub fn skeleton_source(psi: &ControlField, n: usize, base: &SpectralField, noise: &NoiseModel) -> SpectralField {
    let mut out = SpectralField::zeros(base.basis());
    let weights = noise.marks().weights();
    for (i, w) in weights.iter().enumerate() {
        let p = psi.value(i, n);
        if p == 0.0 {
            continue;
        }
        if let Some(g) = noise.coefficient(base, i) {
            out.axpy(p * w, &g);
        }
    }
    out
}

fn check_control(psi: &ControlField, noise: &NoiseModel, grid: &TimeGrid) -> Result<()> {
    if psi.n_nodes() != grid.n_nodes() || psi.n_marks() != noise.marks().len() {
        return Err(Error::GridMismatch(format!(
            "control is {} marks x {} nodes, expected {} x {}",
            psi.n_marks(),
            psi.n_nodes(),
            noise.marks().len(),
            grid.n_nodes()
        )));
    }
    Ok(())
}

/// Solves the skeleton equation
/// `dη/dt = -Aη - B(η, u⁰) - B(u⁰, η) + Σ_i ψ(y_i, t) G(u⁰(t), y_i) ϑ_i`, `η(0) = 0`.
///
/// `psi` is read as the moderate-deviation control `ψ` whatever its storage.
pub fn solve_skeleton(psi: &ControlField, base: &Trajectory, noise: &NoiseModel, grid: &TimeGrid) -> Result<Trajectory> {
    solve_skeleton_with(psi, base, noise, grid, SkeletonOptions::default())
}

pub fn solve_skeleton_with(
    psi: &ControlField,
    base: &Trajectory,
    noise: &NoiseModel,
    grid: &TimeGrid,
    opts: SkeletonOptions,
) -> Result<Trajectory> {
    base.check_grid(grid)?;
    check_control(psi, noise, grid)?;
    let psi = psi.to_psi()?;
    let sources: Vec<SpectralField> =
        (0..grid.n_nodes()).map(|n| skeleton_source(&psi, n, base.get(n), noise)).collect();
    solve_linear(base, &sources, grid, opts.transport)
}

/// Mild solution `Z(t) = ∫₀ᵗ e^{-A(t-s)} f(s) ds` of `dZ = -AZ dt + f dt`, `Z(0) = 0`.
pub fn solve_mild_forced(forcing: &[SpectralField], grid: &TimeGrid) -> Result<Trajectory> {
    if forcing.len() != grid.n_nodes() {
        return Err(Error::GridMismatch(format!(
            "forcing has {} samples, grid has {} nodes",
            forcing.len(),
            grid.n_nodes()
        )));
    }
    let basis = forcing[0].basis();
    if forcing.iter().any(|f| !f.same_basis(&forcing[0])) {
        return Err(Error::BasisMismatch);
    }
    let etd = Etd2::new(basis, grid.dt());
    let mut fields = Vec::with_capacity(grid.n_nodes());
    fields.push(SpectralField::zeros(basis));
    for n in 0..grid.n_steps() {
        let next = etd.step(&fields[n], &forcing[n], |_| Ok(forcing[n + 1].clone()))?;
        check_state(&next, n + 1, f64::INFINITY)?;
        fields.push(next);
    }
    Ok(Trajectory::from_parts(0.0, grid.dt(), fields))
}

fn solve_linear(base: &Trajectory, sources: &[SpectralField], grid: &TimeGrid, transport: bool) -> Result<Trajectory> {
    let basis = base.basis();
    let etd = Etd2::new(basis, grid.dt());
    let rhs = |eta: &SpectralField, n: usize| -> Result<SpectralField> {
        if transport {
            let mut out = linearized_advection(base.get(n), eta)?;
            out.scale_mut(-1.0);
            out.axpy(1.0, &sources[n]);
            Ok(out)
        } else {
            Ok(sources[n].clone())
        }
    };
    let mut fields = Vec::with_capacity(grid.n_nodes());
    fields.push(SpectralField::zeros(basis));
    for n in 0..grid.n_steps() {
        let f0 = rhs(&fields[n], n)?;
        let next = etd.step(&fields[n], &f0, |a| rhs(a, n + 1))?;
        check_state(&next, n + 1, f64::INFINITY)?;
        fields.push(next);
    }
    Ok(Trajectory::from_parts(0.0, grid.dt(), fields))
}

/// `|u(T)|² + 2ν∫‖u‖² - |u(0)|² - 2∫(f, u)` with trapezoid time integrals.
pub fn energy_balance_residual(traj: &Trajectory, force: &Force) -> f64 {
    let nu = traj.basis().nu();
    let dt = traj.dt();
    let last = traj.len() - 1;
    let mut work = 0.0;
    for n in 0..traj.len() {
        let w = if n == 0 || n == last { 0.5 * dt } else { dt };
        if let Some(f) = force.at(n, traj.t0() + n as f64 * dt) {
            work += w * f.inner_h_unchecked(traj.get(n));
        }
    }
    traj.terminal().h_norm_sq() + 2.0 * nu * traj.integral_v_sq() - traj.get(0).h_norm_sq() - 2.0 * work
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{Coefficient, MarkSpace, NoiseModel};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn phi_functions_are_continuous_across_branches() {
        for &z in &[0.0999999, 0.1, 0.1000001] {
            let direct = ((-z as f64).exp_m1() + z) / (z * z);
            assert!((phi2(z) - direct).abs() < 1e-13);
        }
        assert!((phi1(1e-9) - 1.0).abs() < 1e-9);
        assert!((phi2(0.0) - 0.5).abs() < 1e-16);
    }

    #[test]
    fn zero_state_stays_zero() {
        let b = Basis::new(3, 0.1).unwrap();
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let tr = solve_nse(&SpectralField::zeros(&b), &Force::Zero, &grid).unwrap();
        assert_eq!(tr.len(), 11);
        assert!(tr.fields().iter().all(|f| f.max_abs_coeff() == 0.0));
    }

    #[test]
    fn single_mode_decays_like_heat() {
        let b = Basis::new(4, 0.07).unwrap();
        let u0 = SpectralField::from_modes(&b, &[([2, 1], c(0.8, -0.3))]).unwrap();
        let grid = TimeGrid::new(2.0, 40).unwrap();
        let tr = solve_nse(&u0, &Force::Zero, &grid).unwrap();
        for (n, f) in tr.fields().iter().enumerate() {
            let expect = u0.scaled((-0.07 * 5.0 * grid.time(n)).exp());
            assert!((f - &expect).max_abs_coeff() < 1e-8);
        }
    }

    #[test]
    fn energy_cap_rejects_large_initial_states() {
        let b = Basis::new(2, 0.1).unwrap();
        let u0 = SpectralField::from_modes(&b, &[([1, 0], c(1e4, 0.0))]).unwrap();
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let opts = SolverOptions { energy_cap: 1.0, ..Default::default() };
        assert!(matches!(solve_nse_with(&u0, &Force::Zero, &grid, &opts), Err(Error::EnergyCap { .. })));
    }

    #[test]
    fn blow_up_is_reported_with_its_step() {
        let b = Basis::new(2, 0.1).unwrap();
        let u0 = SpectralField::from_modes(&b, &[([1, 0], c(1.0, 0.0))]).unwrap();
        let f = SpectralField::from_modes(&b, &[([1, 1], c(1e3, 0.0))]).unwrap();
        let grid = TimeGrid::new(1.0, 8).unwrap();
        let opts = SolverOptions { blowup: 10.0, ..Default::default() };
        let err = solve_nse_with(&u0, &Force::Steady(f), &grid, &opts).unwrap_err();
        assert!(matches!(err, Error::Diverged { step: 1 }));
    }

    #[test]
    fn mild_solution_of_constant_single_mode_forcing() {
        let b = Basis::new(3, 0.2).unwrap();
        let grid = TimeGrid::new(1.5, 12).unwrap();
        let f = SpectralField::from_modes(&b, &[([1, 2], c(0.4, 0.7))]).unwrap();
        let tr = solve_mild_forced(&vec![f.clone(); grid.n_nodes()], &grid).unwrap();
        let lam = 0.2 * 5.0;
        for n in 0..grid.n_nodes() {
            let t = grid.time(n);
            let expect = f.scaled((1.0 - (-lam * t).exp()) / lam);
            assert!((tr.get(n) - &expect).max_abs_coeff() < 1e-10);
        }
        let zero = solve_mild_forced(&vec![SpectralField::zeros(&b); grid.n_nodes()], &grid).unwrap();
        assert!(zero.fields().iter().all(|f| f.max_abs_coeff() == 0.0));
    }

    fn constant_noise(b: &Arc<Basis>) -> NoiseModel {
        let g0 = SpectralField::from_modes(b, &[([1, 0], c(1.0, 0.0)), ([1, 1], c(0.0, 0.5))]).unwrap();
        let g1 = SpectralField::from_modes(b, &[([0, 2], c(0.3, -0.2))]).unwrap();
        let marks = MarkSpace::finite(vec![0.25, 0.75], vec![1.0, 0.5]).unwrap();
        NoiseModel::new(marks, Coefficient::affine(vec![g0, g1], vec![1.0, 2.0], 0.0, 0).unwrap(), Force::Zero)
            .unwrap()
    }

    #[test]
    fn skeleton_with_zero_control_is_zero() {
        let b = Basis::new(3, 0.1).unwrap();
        let grid = TimeGrid::new(1.0, 16).unwrap();
        let noise = constant_noise(&b);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = SpectralField::random(&b, &mut rng);
        let u0 = r.scaled(0.5 / r.h_norm());
        let base = solve_nse(&u0, &Force::Zero, &grid).unwrap();
        let psi = ControlField::zeros_psi(2, grid.n_nodes());
        let eta = solve_skeleton(&psi, &base, &noise, &grid).unwrap();
        assert!(eta.fields().iter().all(|f| f.max_abs_coeff() == 0.0));
    }

    #[test]
    fn skeleton_closed_form_with_resting_base_flow() {
        // u⁰ ≡ 0, constant ψ: η(t) = (Σ ψ_i h_i ϑ_i) ∫₀ᵗ e^{-A(t-s)} g ds, per mark.
        let b = Basis::new(3, 0.1).unwrap();
        let grid = TimeGrid::new(1.0, 16).unwrap();
        let noise = constant_noise(&b);
        let base = solve_nse(&SpectralField::zeros(&b), &Force::Zero, &grid).unwrap();
        let psi = ControlField::from_fn_psi(2, &grid, |i, _| if i == 0 { 0.7 } else { -1.3 });
        let eta = solve_skeleton(&psi, &base, &noise, &grid).unwrap();
        let g0 = noise.coefficient(base.get(0), 0).unwrap();
        let g1 = noise.coefficient(base.get(0), 1).unwrap();
        let src = &g0.scaled(0.7 * 1.0) + &g1.scaled(-1.3 * 0.5);
        for n in 0..grid.n_nodes() {
            let t = grid.time(n);
            let diag: Vec<f64> = (0..b.num_modes())
                .map(|i| {
                    let lam = b.stokes_eigenvalue(i);
                    (1.0 - (-lam * t).exp()) / lam
                })
                .collect();
            let expect = src.map_diag(&diag);
            assert!((eta.get(n) - &expect).max_abs_coeff() < 1e-8);
        }
    }

    #[test]
    fn skeleton_without_transport_matches_mild_solution() {
        let b = Basis::new(3, 0.1).unwrap();
        let grid = TimeGrid::new(1.0, 20).unwrap();
        let noise = constant_noise(&b);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let u0 = SpectralField::random(&b, &mut rng).scaled(0.2);
        let base = solve_nse(&u0, &Force::Zero, &grid).unwrap();
        let psi = ControlField::from_fn_psi(2, &grid, |i, t| (3.0 * t + i as f64).sin());
        let eta = solve_skeleton_with(&psi, &base, &noise, &grid, SkeletonOptions { transport: false }).unwrap();
        let sources: Vec<_> = (0..grid.n_nodes()).map(|n| skeleton_source(&psi, n, base.get(n), &noise)).collect();
        let z = solve_mild_forced(&sources, &grid).unwrap();
        assert!(eta.sup_gap(&z).unwrap() < 1e-14);
    }

    #[test]
    fn skeleton_rejects_mismatched_grid() {
        let b = Basis::new(2, 0.1).unwrap();
        let grid = TimeGrid::new(1.0, 8).unwrap();
        let noise = constant_noise(&Basis::new(2, 0.1).unwrap());
        let base = solve_nse(&SpectralField::zeros(&b), &Force::Zero, &grid).unwrap();
        let other = TimeGrid::new(1.0, 9).unwrap();
        let psi = ControlField::zeros_psi(2, other.n_nodes());
        assert!(matches!(solve_skeleton(&psi, &base, &noise, &other), Err(Error::GridMismatch(_))));
    }
}
