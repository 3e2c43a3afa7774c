use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::spectral::Basis;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Divergence-free, mean-zero velocity field stored as one complex scalar per
/// retained mode. The velocity of mode `k` is `û_k = i c_k κ^⊥/|κ|`, and
/// `c_{-k} = conj(c_k)` holds for every stored field.
#[derive(Debug, Clone)]
pub struct SpectralField {
    basis: Arc<Basis>,
    coeffs: Vec<Complex64>,
}

/// `(|u|_H, ‖u‖_V, ‖u‖_{L⁴})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub h: f64,
    pub v: f64,
    pub l4: f64,
}

/// Real vector field sampled on an `m × m` uniform grid, `x_j = j L / m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalVectorField {
    pub m: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PhysicalVectorField {
    pub fn zeros(m: usize) -> Self {
        Self { m, x: vec![0.0; m * m], y: vec![0.0; m * m] }
    }

    /// Samples `f(x, y) -> [u_x, u_y]` at the grid points of a period `length`.
    pub fn from_fn(m: usize, length: f64, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let h = length / m as f64;
        let mut out = Self::zeros(m);
        for ix in 0..m {
            for iy in 0..m {
                let v = f(ix as f64 * h, iy as f64 * h);
                out.x[ix * m + iy] = v[0];
                out.y[ix * m + iy] = v[1];
            }
        }
        out
    }
}

impl SpectralField {
    pub fn zeros(basis: &Arc<Basis>) -> Self {
        Self { basis: basis.clone(), coeffs: vec![Complex64::default(); basis.num_modes()] }
    }

    /// Builds a field from `(k, c_k)` pairs; the conjugate partner at `-k` is
    /// filled in automatically.
    pub fn from_modes(basis: &Arc<Basis>, modes: &[([i64; 2], Complex64)]) -> Result<Self> {
        let mut out = Self::zeros(basis);
        for &(k, c) in modes {
            let idx = basis
                .index_of(k)
                .ok_or_else(|| Error::InvalidParameter(format!("mode {k:?} is not retained by the basis")))?;
            out.coeffs[idx] = c;
            out.coeffs[basis.negative(idx)] = c.conj();
        }
        Ok(out)
    }

    /// Takes raw coefficients in canonical order and symmetrises them so that
    /// `c_{-k} = conj(c_k)`.
    pub fn from_coeffs(basis: &Arc<Basis>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != basis.num_modes() {
            return Err(Error::InvalidParameter(format!(
                "expected {} coefficients, got {}",
                basis.num_modes(),
                coeffs.len()
            )));
        }
        let mut out = Self { basis: basis.clone(), coeffs };
        out.symmetrise();
        Ok(out)
    }

    pub(crate) fn from_raw(basis: &Arc<Basis>, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), basis.num_modes());
        Self { basis: basis.clone(), coeffs }
    }

    fn symmetrise(&mut self) {
        for i in 0..self.coeffs.len() {
            let j = self.basis.negative(i);
            if i < j {
                let c = 0.5 * (self.coeffs[i] + self.coeffs[j].conj());
                self.coeffs[i] = c;
                self.coeffs[j] = c.conj();
            }
        }
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: [i64; 2]) -> Option<Complex64> {
        self.basis.index_of(k).map(|i| self.coeffs[i])
    }

    pub fn same_basis(&self, other: &SpectralField) -> bool {
        Arc::ptr_eq(&self.basis, &other.basis) || *self.basis == *other.basis
    }

    pub(crate) fn check_basis(&self, other: &SpectralField) -> Result<()> {
        if self.same_basis(other) {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    /// Velocity coefficients `û_k`.
    pub fn velocity_hat(&self, idx: usize) -> [Complex64; 2] {
        let e = self.basis.polarisation(idx);
        let ic = I * self.coeffs[idx];
        [ic * e[0], ic * e[1]]
    }

    /// `⟨u, w⟩_H`.
    pub fn inner_h(&self, other: &SpectralField) -> Result<f64> {
        self.check_basis(other)?;
        Ok(self.inner_h_unchecked(other))
    }

    pub(crate) fn inner_h_unchecked(&self, other: &SpectralField) -> f64 {
        let s: f64 = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.re * b.re + a.im * b.im).sum();
        self.basis.area() * s
    }

    pub fn h_norm_sq(&self) -> f64 {
        self.basis.area() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn h_norm(&self) -> f64 {
        self.h_norm_sq().sqrt()
    }

    pub fn v_norm_sq(&self) -> f64 {
        let s: f64 = self.coeffs.iter().enumerate().map(|(i, c)| self.basis.wavenumber_sq(i) * c.norm_sqr()).sum();
        self.basis.area() * s
    }

    pub fn v_norm(&self) -> f64 {
        self.v_norm_sq().sqrt()
    }

    /// `∫|u|⁴ dx`, by quadrature on a grid fine enough to be exact for the
    /// truncated field.
    pub fn l4_norm_pow4(&self) -> f64 {
        let fft = self.basis.quartic_fft();
        let q = fft.size();
        let mut buf = vec![Complex64::default(); q * q];
        for i in 0..self.coeffs.len() {
            let [ux, uy] = self.velocity_hat(i);
            buf[self.basis.quartic_slot(i)] = ux + I * uy;
        }
        fft.inverse(&mut buf);
        let cell = self.basis.area() / (q * q) as f64;
        cell * buf.iter().map(|z| z.norm_sqr() * z.norm_sqr()).sum::<f64>()
    }

    pub fn l4_norm(&self) -> f64 {
        self.l4_norm_pow4().powf(0.25)
    }

    pub fn norms(&self) -> Norms {
        Norms { h: self.h_norm(), v: self.v_norm(), l4: self.l4_norm() }
    }

    /// Largest `|c_k|`.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &SpectralField) {
        debug_assert!(self.same_basis(other));
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += alpha * b;
        }
    }

    pub fn scaled(&self, alpha: f64) -> SpectralField {
        let mut out = self.clone();
        out.scale_mut(alpha);
        out
    }

    pub fn scale_mut(&mut self, alpha: f64) {
        for c in &mut self.coeffs {
            *c *= alpha;
        }
    }

    /// Multiplies each coefficient by a real per-mode factor.
    pub(crate) fn map_diag(&self, diag: &[f64]) -> SpectralField {
        let coeffs = self.coeffs.iter().zip(diag).map(|(c, d)| c * d).collect();
        SpectralField { basis: self.basis.clone(), coeffs }
    }

    /// `self_k += diag_k * other_k`.
    pub(crate) fn add_diag(&mut self, diag: &[f64], other: &SpectralField) {
        debug_assert!(self.same_basis(other));
        for ((a, b), d) in self.coeffs.iter_mut().zip(&other.coeffs).zip(diag) {
            *a += b * d;
        }
    }

    /// Projection onto modes with `max(|k₁|, |k₂|) <= cutoff`.
    pub fn low_pass(&self, cutoff: usize) -> SpectralField {
        let c = cutoff as i64;
        let coeffs = self
            .coeffs
            .iter()
            .zip(self.basis.modes())
            .map(|(v, k)| if k[0].abs() <= c && k[1].abs() <= c { *v } else { Complex64::default() })
            .collect();
        SpectralField { basis: self.basis.clone(), coeffs }
    }

    /// Flattens to real degrees of freedom `(re, im)` per stored coefficient.
    pub fn to_real_vec(&self) -> Vec<f64> {
        self.coeffs.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn from_real_vec(basis: &Arc<Basis>, v: &[f64]) -> Result<Self> {
        if v.len() != 2 * basis.num_modes() {
            return Err(Error::InvalidParameter(format!(
                "expected {} reals, got {}",
                2 * basis.num_modes(),
                v.len()
            )));
        }
        let coeffs = v.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
        Self::from_coeffs(basis, coeffs)
    }

    /// Velocity on the padded product grid.
    pub fn to_physical(&self) -> PhysicalVectorField {
        let fft = self.basis.grid_fft();
        let m = fft.size();
        let mut buf = vec![Complex64::default(); m * m];
        for i in 0..self.coeffs.len() {
            let [ux, uy] = self.velocity_hat(i);
            buf[self.basis.grid_slot(i)] = ux + I * uy;
        }
        fft.inverse(&mut buf);
        PhysicalVectorField { m, x: buf.iter().map(|z| z.re).collect(), y: buf.iter().map(|z| z.im).collect() }
    }

    /// Random field with a random cutoff, spectral slope, sparsity and
    /// amplitude; used by the property ensembles.
    pub fn random<R: Rng + ?Sized>(basis: &Arc<Basis>, rng: &mut R) -> SpectralField {
        let n = basis.n() as i64;
        let cutoff = rng.random_range(1..=n);
        let slope: f64 = rng.random_range(0.0..3.0);
        let keep: f64 = rng.random_range(0.15..=1.0);
        let amplitude = 10f64.powf(rng.random_range(-2.0..2.0));
        let mut out = Self::zeros(basis);
        let mut any = false;
        let reps: Vec<usize> = basis.half_modes().collect();
        for &i in &reps {
            let k = basis.modes()[i];
            if k[0].abs() > cutoff || k[1].abs() > cutoff || rng.random::<f64>() > keep {
                continue;
            }
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            let c = Complex64::new(re, im) * amplitude * basis.wavenumber_sq(i).powf(-0.5 * slope);
            out.coeffs[i] = c;
            out.coeffs[basis.negative(i)] = c.conj();
            any = true;
        }
        if !any {
            let i = reps[rng.random_range(0..reps.len())];
            out.coeffs[i] = Complex64::new(amplitude, 0.0);
            out.coeffs[basis.negative(i)] = Complex64::new(amplitude, 0.0);
        }
        out
    }
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        self.same_basis(other) && self.coeffs == other.coeffs
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        assert!(self.same_basis(rhs), "basis mismatch");
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect();
        SpectralField { basis: self.basis.clone(), coeffs }
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        assert!(self.same_basis(rhs), "basis mismatch");
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect();
        SpectralField { basis: self.basis.clone(), coeffs }
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scaled(rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scaled(-1.0)
    }
}
