//! Invariants checked on generated inputs.

use num_complex::Complex64;
use nse_mdp::dynamics::{solve_nse, solve_skeleton, Force, TimeGrid};
use nse_mdp::experiment::ExperimentConfig;
use nse_mdp::noise::{cost_lt, entropy_l, Coefficient, ControlField, MarkSpace, NoiseModel};
use nse_mdp::rate::{rate_terminal, RateOptions, SkeletonOperator};
use nse_mdp::seed::ReplicaSeed;
use nse_mdp::spectral::{nonlinear_b, Basis, SpectralField};
use nse_mdp::stats::wilson_interval;
use nse_mdp::stochastic::{ensemble_stats, simulate_controlled_x, simulate_u_eps, RunRecord, ScalingSpec};
use proptest::prelude::*;

fn noise(basis: &std::sync::Arc<Basis>, zero: bool) -> NoiseModel {
    let g1 = SpectralField::from_modes(basis, &[([1, 0], Complex64::new(0.5, 0.0))]).unwrap();
    let g2 = SpectralField::from_modes(basis, &[([1, 1], Complex64::new(0.0, 0.4))]).unwrap();
    let coeff = if zero { Coefficient::Zero } else { Coefficient::affine(vec![g1, g2], vec![1.0, 0.6], 0.2, 1).unwrap() };
    NoiseModel::new(MarkSpace::finite(vec![0.3, 0.7], vec![1.0, 0.5]).unwrap(), coeff, Force::Zero).unwrap()
}

fn small_state(basis: &std::sync::Arc<Basis>, seed: u64) -> SpectralField {
    let r = SpectralField::random(basis, &mut ReplicaSeed::new(seed, 0).rng());
    r.scaled(0.5 / r.h_norm())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn advection_is_skew(seed in any::<u64>(), n in 1usize..5) {
        let b = Basis::new(n, 0.1).unwrap();
        let mut rng = ReplicaSeed::new(seed, 0).rng();
        let u = SpectralField::random(&b, &mut rng);
        let v = SpectralField::random(&b, &mut rng);
        let w = SpectralField::random(&b, &mut rng);
        let s = nonlinear_b(&u, &v).unwrap().inner_h(&w).unwrap() + nonlinear_b(&u, &w).unwrap().inner_h(&v).unwrap();
        prop_assert!(s.abs() <= 1e-10 * u.v_norm() * v.v_norm() * w.v_norm());
    }

    #[test]
    fn entropy_is_nonnegative_and_vanishes_at_one(r in 0.0f64..50.0) {
        prop_assert!(entropy_l(r) >= 0.0);
        prop_assert_eq!(entropy_l(1.0), 0.0);
    }

    #[test]
    fn cost_is_zero_only_at_one(level in 0.0f64..3.0) {
        let grid = TimeGrid::new(1.0, 8).unwrap();
        let phi = ControlField::from_fn_phi(2, &grid, |_, _| level).unwrap();
        let c = cost_lt(&phi, &[1.0, 0.5], &grid).unwrap();
        prop_assert!(c >= 0.0);
        prop_assert_eq!(c == 0.0, level == 1.0);
    }

    #[test]
    fn wilson_interval_contains_the_estimate(n in 1u64..5000, frac in 0.0f64..=1.0) {
        let hits = ((n as f64) * frac).floor() as u64;
        let (lo, hi) = wilson_interval(hits, n, 1.96);
        let p = hits as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-12 && p <= hi + 1e-12 && hi <= 1.0);
    }

    #[test]
    fn ensemble_reduction_ignores_order(xs in prop::collection::vec(-1e6f64..1e6, 2..40), rot in 0usize..40) {
        let runs: Vec<RunRecord> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| RunRecord {
                config_hash: "h".into(),
                seed: 0,
                replica: i as u64,
                diagnostics: [("x".to_string(), *x)].into_iter().collect(),
            })
            .collect();
        let mut shuffled = runs.clone();
        let len = shuffled.len();
        shuffled.rotate_left(rot % len);
        prop_assert_eq!(ensemble_stats(&runs).unwrap(), ensemble_stats(&shuffled).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn unit_intensity_control_reproduces_the_uncontrolled_path(seed in any::<u64>(), eps in 0.01f64..0.5) {
        let b = Basis::new(2, 0.1).unwrap();
        let grid = TimeGrid::new(0.5, 16).unwrap();
        let nm = noise(&b, false);
        let u0 = small_state(&b, seed);
        let s = ScalingSpec::with_default_gamma(eps).unwrap();
        let one = ControlField::unit_phi(2, grid.n_nodes());
        let a = simulate_u_eps(&s, &u0, &nm, &grid, ReplicaSeed::new(seed, 1)).unwrap();
        let x = simulate_controlled_x(&s, &u0, &nm, &one, &grid, ReplicaSeed::new(seed, 1)).unwrap();
        prop_assert_eq!(a.fields(), x.fields());
    }

    #[test]
    fn zero_coefficient_reduces_to_the_limit_equation(seed in any::<u64>(), eps in 0.01f64..0.5) {
        let b = Basis::new(2, 0.1).unwrap();
        let grid = TimeGrid::new(0.5, 16).unwrap();
        let u0 = small_state(&b, seed);
        let s = ScalingSpec::with_default_gamma(eps).unwrap();
        let a = simulate_u_eps(&s, &u0, &noise(&b, true), &grid, ReplicaSeed::new(seed, 2)).unwrap();
        let d = solve_nse(&u0, &Force::Zero, &grid).unwrap();
        prop_assert_eq!(a.fields(), d.fields());
    }

    #[test]
    fn skeleton_is_linear_in_the_control(seed in any::<u64>(), alpha in -3.0f64..3.0) {
        let b = Basis::new(2, 0.1).unwrap();
        let grid = TimeGrid::new(0.5, 16).unwrap();
        let nm = noise(&b, false);
        let base = solve_nse(&small_state(&b, seed), &Force::Zero, &grid).unwrap();
        let f = |t: f64, i: usize| ((seed % 7) as f64 * t + i as f64).sin();
        let p = ControlField::from_fn_psi(2, &grid, |i, t| f(t, i));
        let q = ControlField::from_fn_psi(2, &grid, |i, t| t * t - i as f64);
        let mut combo = p.clone();
        combo.axpy(alpha, &q);
        let lhs = solve_skeleton(&combo, &base, &nm, &grid).unwrap();
        let ep = solve_skeleton(&p, &base, &nm, &grid).unwrap();
        let eq = solve_skeleton(&q, &base, &nm, &grid).unwrap();
        for n in 0..grid.n_nodes() {
            let mut rhs = ep.get(n).clone();
            rhs.axpy(alpha, eq.get(n));
            prop_assert!((lhs.get(n) - &rhs).h_norm() <= 1e-12 * (1.0 + rhs.h_norm()));
        }
    }

    #[test]
    fn rate_is_quadratically_homogeneous(seed in any::<u64>(), scale in 0.1f64..5.0) {
        let b = Basis::new(2, 0.1).unwrap();
        let grid = TimeGrid::new(0.5, 12).unwrap();
        let nm = noise(&b, false);
        let base = solve_nse(&small_state(&b, seed), &Force::Zero, &grid).unwrap();
        let op = SkeletonOperator::new(base, nm, grid).unwrap();
        let psi = ControlField::from_fn_psi(2, &grid, |i, t| (seed as f64 * 1e-19 + t + i as f64).cos());
        let target = op.apply_forward(&psi).unwrap();
        let opts = RateOptions { tol: 1e-11, max_iter: 2000, ..Default::default() };
        let i1 = rate_terminal(&op, &target, &opts).unwrap().i;
        let i2 = rate_terminal(&op, &target.scaled(scale), &opts).unwrap().i;
        prop_assert!((i2 - scale * scale * i1).abs() <= 1e-7 * scale * scale * i1, "{} {}", i1, i2 / (scale * scale));
        prop_assert!(i1 <= 0.5 * op.control_inner(&psi, &psi) * (1.0 + 1e-9));
    }
}

const SMALL: &str = r#"
[basis]
n = 2
nu = 0.1
[grid]
horizon = 1.0
n_steps = 8
[noise]
[[noise.marks]]
weight = 1.0
amplitude = 0.5
base = [[1, 0, 0.3, 0.0]]
[scaling]
eps = [0.1]
[ensemble]
replicas = 2
seed = 1
"#;

proptest! {
    #[test]
    fn config_hash_survives_a_toml_round_trip(seed in any::<u64>(), replicas in 1u64..10_000, nu in 0.01f64..1.0) {
        let mut c = ExperimentConfig::from_toml_str(SMALL).unwrap();
        c.ensemble.seed = seed;
        c.ensemble.replicas = replicas;
        c.basis.nu = nu;
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap();
        prop_assert_eq!(c.hash(), back.hash());
    }
}
