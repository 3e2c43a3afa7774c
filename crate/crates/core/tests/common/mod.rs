//! Shared fixtures and dense oracles for the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use nse_mdp::dynamics::{solve_nse, TimeGrid};
use nse_mdp::experiment::ExperimentConfig;
use nse_mdp::noise::{Coefficient, ControlField, ControlKind, MarkSpace, NoiseModel};
use nse_mdp::rate::SkeletonOperator;
use nse_mdp::spectral::{Basis, SpectralField};
use nse_mdp::dynamics::Force;

pub const VERIFY_CORE: &str = include_str!("../../../../configs/verify_core.toml");
pub const THM35: &str = include_str!("../../../../configs/thm35.toml");
pub const PROP33: &str = include_str!("../../../../configs/prop33.toml");
pub const PROP36: &str = include_str!("../../../../configs/prop36.toml");
pub const MDP_TAIL: &str = include_str!("../../../../configs/mdp_tail.toml");

pub fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(text).expect("shipped config loads")
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// N = 1, 16 steps, 2 marks, a nontrivial base flow and state-dependent coefficient.
pub fn tiny_operator() -> SkeletonOperator {
    let basis = Basis::new(1, 0.1).unwrap();
    let grid = TimeGrid::new(1.0, 16).unwrap();
    let u0 = SpectralField::from_modes(&basis, &[([1, 0], c(0.7, 0.1)), ([0, 1], c(-0.3, 0.4)), ([1, 1], c(0.2, -0.2))]).unwrap();
    let base = solve_nse(&u0, &Force::Zero, &grid).unwrap();
    let g1 = SpectralField::from_modes(&basis, &[([1, 0], c(1.0, 0.0)), ([1, -1], c(0.0, 0.5))]).unwrap();
    let g2 = SpectralField::from_modes(&basis, &[([0, 1], c(0.3, 0.8)), ([1, 1], c(-0.6, 0.0))]).unwrap();
    let coeff = Coefficient::affine(vec![g1, g2], vec![1.0, 0.7], 0.4, 1).unwrap();
    let marks = MarkSpace::finite(vec![0.25, 0.75], vec![1.0, 0.6]).unwrap();
    let noise = NoiseModel::new(marks, coeff, Force::Zero).unwrap();
    SkeletonOperator::new(base, noise, grid).unwrap()
}

/// Orthonormal real coordinates of a field: `sqrt(2) L (re, im)` per half mode.
pub fn h_coords(f: &SpectralField) -> DVector<f64> {
    let b = f.basis();
    let s = 2f64.sqrt() * b.length();
    let mut out = Vec::new();
    for idx in b.half_modes() {
        let v = f.coeffs()[idx];
        out.push(s * v.re);
        out.push(s * v.im);
    }
    DVector::from_vec(out)
}

pub fn from_h_coords(basis: &Arc<Basis>, q: &DVector<f64>) -> SpectralField {
    let s = 2f64.sqrt() * basis.length();
    let modes: Vec<_> = basis
        .half_modes()
        .enumerate()
        .map(|(j, idx)| (basis.modes()[idx], c(q[2 * j] / s, q[2 * j + 1] / s)))
        .collect();
    SpectralField::from_modes(basis, &modes).unwrap()
}

/// Dense `Λ W^{-1/2}` in orthonormal field coordinates, where `W` is the
/// diagonal `L²(ϑ_T)` weight of the control nodes.
pub struct DenseSkeleton {
    pub matrix: DMatrix<f64>,
    pub w_sqrt: Vec<f64>,
    pub n_marks: usize,
    pub n_nodes: usize,
}

impl DenseSkeleton {
    pub fn build(op: &SkeletonOperator) -> Self {
        let m = op.n_marks();
        let nodes = op.grid().n_nodes();
        let weights = op.weights().to_vec();
        let dim = 2 * op.base().basis().half_modes().count();
        let mut matrix = DMatrix::zeros(dim, m * nodes);
        let mut w_sqrt = Vec::with_capacity(m * nodes);
        for i in 0..m {
            for n in 0..nodes {
                let col = i * nodes + n;
                let w = weights[i] * op.grid().weight(n);
                let mut values = vec![0.0; m * nodes];
                values[col] = 1.0 / w.sqrt();
                let psi = ControlField::new(ControlKind::Psi, m, nodes, values).unwrap();
                matrix.set_column(col, &h_coords(&op.apply_forward(&psi).unwrap()));
                w_sqrt.push(w.sqrt());
            }
        }
        Self { matrix, w_sqrt, n_marks: m, n_nodes: nodes }
    }

    /// `½|z*|²` for the least-norm `z*` with `(Λ W^{-1/2}) z* = q`.
    pub fn rate(&self, q: &DVector<f64>) -> f64 {
        let svd = self.matrix.clone().svd(true, true);
        let cut = 1e-12 * svd.singular_values.max();
        let z = svd.solve(q, cut).unwrap();
        0.5 * z.norm_squared()
    }

    /// Maps a coordinate vector `z` back to the control `ψ = W^{-1/2} z`.
    pub fn control(&self, z: &DVector<f64>) -> ControlField {
        let values = z.iter().zip(&self.w_sqrt).map(|(z, w)| z / w).collect();
        ControlField::new(ControlKind::Psi, self.n_marks, self.n_nodes, values).unwrap()
    }

    /// Largest eigenvalue of `ΛΛ*` in orthonormal coordinates.
    pub fn gram_top(&self) -> f64 {
        let g = &self.matrix * self.matrix.transpose();
        SymmetricEigen::new(g).eigenvalues.max()
    }
}
