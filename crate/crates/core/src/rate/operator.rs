use crate::dynamics::{solve_skeleton_with, Etd2, SkeletonOptions, TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::noise::{ControlField, NoiseModel};
use crate::spectral::{linearized_advection_transpose, SpectralField};

/// The linear map `Λ: ψ ↦ η(T)` of the discrete skeleton equation around a frozen base flow.
#[derive(Debug, Clone)]
pub struct SkeletonOperator {
    base: Trajectory,
    noise: NoiseModel,
    grid: TimeGrid,
    opts: SkeletonOptions,
    /// `G(u⁰(t_n), y_i)` indexed `[n][i]`.
    coeffs: Vec<Vec<SpectralField>>,
    etd: Etd2,
}

impl SkeletonOperator {
    pub fn new(base: Trajectory, noise: NoiseModel, grid: TimeGrid) -> Result<Self> {
        Self::with_options(base, noise, grid, SkeletonOptions::default())
    }

    pub fn with_options(base: Trajectory, noise: NoiseModel, grid: TimeGrid, opts: SkeletonOptions) -> Result<Self> {
        base.check_grid(&grid)?;
        let basis = base.basis().clone();
        let coeffs = (0..grid.n_nodes())
            .map(|n| {
                (0..noise.marks().len())
                    .map(|i| noise.coefficient(base.get(n), i).unwrap_or_else(|| SpectralField::zeros(&basis)))
                    .collect()
            })
            .collect();
        let etd = Etd2::new(&basis, grid.dt());
        Ok(Self { base, noise, grid, opts, coeffs, etd })
    }

    pub fn base(&self) -> &Trajectory {
        &self.base
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_marks(&self) -> usize {
        self.noise.marks().len()
    }

    pub fn weights(&self) -> &[f64] {
        self.noise.marks().weights()
    }

    /// `⟨ψ₁, ψ₂⟩_{L²(ϑ_T)}`.
    pub fn control_inner(&self, a: &ControlField, b: &ControlField) -> f64 {
        a.inner_l2(b, self.weights(), &self.grid)
    }

    /// `η(T)` for control `ψ`.
    pub fn apply_forward(&self, psi: &ControlField) -> Result<SpectralField> {
        Ok(self.apply_forward_path(psi)?.terminal().clone())
    }

    /// The whole skeleton path for control `ψ`.
    pub fn apply_forward_path(&self, psi: &ControlField) -> Result<Trajectory> {
        solve_skeleton_with(psi, &self.base, &self.noise, &self.grid, self.opts)
    }

    /// `Λ*v`, the exact adjoint of the discrete forward map with respect to
    /// `⟨·,·⟩_H` and `⟨·,·⟩_{L²(ϑ_T)}`.
    pub fn apply_adjoint(&self, v: &SpectralField) -> Result<ControlField> {
        if !v.same_basis(self.base.get(0)) {
            return Err(Error::BasisMismatch);
        }
        let grid = &self.grid;
        let steps = grid.n_steps();
        let basis = v.basis();
        // sensitivities of ⟨η_N, v⟩ to the per-node sources
        let mut grad: Vec<SpectralField> = vec![SpectralField::zeros(basis); grid.n_nodes()];
        let mut lam = v.clone();
        let etd = &self.etd;
        for n in (0..steps).rev() {
            let p2lam = lam.map_diag(&etd.p2);
            let mut abar = lam.clone();
            if self.opts.transport {
                abar.axpy(-1.0, &linearized_advection_transpose(self.base.get(n + 1), &p2lam)?);
            }
            grad[n + 1].axpy(1.0, &p2lam);
            let mut gbar = abar.map_diag(&etd.p1);
            gbar.axpy(-1.0, &p2lam);
            grad[n].axpy(1.0, &gbar);
            lam = abar.map_diag(&etd.decay);
            if self.opts.transport {
                lam.axpy(-1.0, &linearized_advection_transpose(self.base.get(n), &gbar)?);
            }
        }
        let m = self.n_marks();
        let mut values = vec![0.0; m * grid.n_nodes()];
        for n in 0..grid.n_nodes() {
            let w = grid.weight(n);
            for i in 0..m {
                values[i * grid.n_nodes() + n] = self.coeffs[n][i].inner_h_unchecked(&grad[n]) / w;
            }
        }
        ControlField::new(crate::noise::ControlKind::Psi, m, grid.n_nodes(), values)
    }

    /// `ΛΛ*w + μw`.
    pub fn apply_normal(&self, w: &SpectralField, mu: f64) -> Result<SpectralField> {
        let mut out = self.apply_forward(&self.apply_adjoint(w)?)?;
        if mu != 0.0 {
            out.axpy(mu, w);
        }
        Ok(out)
    }

    /// `½⟨w, (ΛΛ* + μ)w⟩_H - ⟨target, w⟩_H`, minimised by the normal-equation solution.
    pub fn normal_objective(&self, target: &SpectralField, w: &SpectralField, mu: f64) -> Result<f64> {
        let nw = self.apply_normal(w, mu)?;
        Ok(0.5 * w.inner_h(&nw)? - target.inner_h(w)?)
    }

    /// H-gradient of [`Self::normal_objective`]: `(ΛΛ* + μ)w - target`.
    pub fn normal_gradient(&self, target: &SpectralField, w: &SpectralField, mu: f64) -> Result<SpectralField> {
        Ok(&self.apply_normal(w, mu)? - target)
    }
}
