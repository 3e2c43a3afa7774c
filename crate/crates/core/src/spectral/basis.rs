use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spectral::fft::Fft2;

/// Smallest admissible zero-padding factor for quadratic products.
pub const MIN_DEALIAS_FACTOR: f64 = 1.5;

/// Truncated Fourier basis on the periodic square `[0, L)²`.
///
/// Retained modes are `k ∈ ℤ²` with `0 < max(|k₁|, |k₂|) ≤ N`, listed in the
/// canonical order used everywhere (snapshots, coefficient vectors): `k₁` runs
/// from `-N` to `N` in the outer loop, `k₂` from `-N` to `N` in the inner loop,
/// and `(0, 0)` is skipped.
///
/// Normalisation: a velocity `u(x) = Σ_k û_k e^{iκ·x}` with `κ = 2πk/L` has
/// `|u|²_H = L² Σ_k |û_k|²` and `‖u‖²_V = L² Σ_k |κ|² |û_k|²`.
#[derive(Debug, Clone)]
pub struct Basis {
    n: usize,
    length: f64,
    nu: f64,
    dealias_factor: f64,
    modes: Vec<[i64; 2]>,
    wavevectors: Vec<[f64; 2]>,
    k2: Vec<f64>,
    units: Vec<[f64; 2]>,
    negatives: Vec<usize>,
    grid: Fft2,
    grid_slots: Vec<usize>,
    quartic: Fft2,
    quartic_slots: Vec<usize>,
}

impl PartialEq for Basis {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.length == other.length
            && self.nu == other.nu
            && self.grid.size() == other.grid.size()
    }
}

impl Basis {
    /// Default period `2π` and the `3/2` padding rule.
    pub fn new(n: usize, nu: f64) -> Result<Arc<Self>> {
        Self::with_options(n, 2.0 * PI, nu, MIN_DEALIAS_FACTOR)
    }

    pub fn with_options(n: usize, length: f64, nu: f64, dealias_factor: f64) -> Result<Arc<Self>> {
        if n < 1 {
            return Err(Error::InvalidParameter("truncation radius N must be >= 1".into()));
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidParameter(format!("viscosity must be positive, got {nu}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!("period must be positive, got {length}")));
        }
        if !(dealias_factor >= MIN_DEALIAS_FACTOR) {
            return Err(Error::InvalidParameter(format!(
                "dealias factor must be >= {MIN_DEALIAS_FACTOR}, got {dealias_factor}"
            )));
        }
        let ni = n as i64;
        let side = 2 * n + 1;
        let m = (dealias_factor * side as f64).ceil() as usize;
        // |u|⁴ carries modes up to 4N, so its quadrature needs more than 4N points per side.
        let q = m.max(4 * n + 2);

        let mut modes = Vec::with_capacity(side * side - 1);
        for k1 in -ni..=ni {
            for k2 in -ni..=ni {
                if k1 != 0 || k2 != 0 {
                    modes.push([k1, k2]);
                }
            }
        }
        let scale = 2.0 * PI / length;
        let wavevectors: Vec<[f64; 2]> =
            modes.iter().map(|k| [scale * k[0] as f64, scale * k[1] as f64]).collect();
        let k2: Vec<f64> = wavevectors.iter().map(|w| w[0] * w[0] + w[1] * w[1]).collect();
        let units = wavevectors
            .iter()
            .zip(&k2)
            .map(|(w, kk)| {
                let norm = kk.sqrt();
                [-w[1] / norm, w[0] / norm]
            })
            .collect();
        let index_of = |k: [i64; 2]| {
            let raw = ((k[0] + ni) as usize) * side + (k[1] + ni) as usize;
            let centre = n * side + n;
            if raw < centre {
                raw
            } else {
                raw - 1
            }
        };
        let negatives = modes.iter().map(|k| index_of([-k[0], -k[1]])).collect();
        let slots = |size: usize| -> Vec<usize> {
            modes
                .iter()
                .map(|k| {
                    let wrap = |v: i64| v.rem_euclid(size as i64) as usize;
                    wrap(k[0]) * size + wrap(k[1])
                })
                .collect()
        };
        let grid_slots = slots(m);
        let quartic_slots = slots(q);

        Ok(Arc::new(Self {
            n,
            length,
            nu,
            dealias_factor,
            modes,
            wavevectors,
            k2,
            units,
            negatives,
            grid: Fft2::new(m),
            grid_slots,
            quartic: Fft2::new(q),
            quartic_slots,
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn dealias_factor(&self) -> f64 {
        self.dealias_factor
    }

    /// Side of the padded physical grid used for products.
    pub fn grid_size(&self) -> usize {
        self.grid.size()
    }

    /// Side of the grid used for the `L⁴` quadrature.
    pub fn quartic_grid_size(&self) -> usize {
        self.quartic.size()
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[[i64; 2]] {
        &self.modes
    }

    /// Position of `k` in the canonical order, or `None` outside the truncation.
    pub fn index_of(&self, k: [i64; 2]) -> Option<usize> {
        let ni = self.n as i64;
        if k == [0, 0] || k[0].abs() > ni || k[1].abs() > ni {
            return None;
        }
        let side = 2 * self.n + 1;
        let raw = ((k[0] + ni) as usize) * side + (k[1] + ni) as usize;
        let centre = self.n * side + self.n;
        Some(if raw < centre { raw } else { raw - 1 })
    }

    /// Physical wavevector `κ = 2πk/L`.
    pub fn wavevector(&self, idx: usize) -> [f64; 2] {
        self.wavevectors[idx]
    }

    /// `|κ|²`.
    pub fn wavenumber_sq(&self, idx: usize) -> f64 {
        self.k2[idx]
    }

    /// Stokes eigenvalue `ν|κ|²` of mode `idx`.
    pub fn stokes_eigenvalue(&self, idx: usize) -> f64 {
        self.nu * self.k2[idx]
    }

    /// Unit polarisation `κ^⊥/|κ|`; the velocity of mode `idx` is `û = i c e`.
    pub fn polarisation(&self, idx: usize) -> [f64; 2] {
        self.units[idx]
    }

    /// Index of `-k`.
    pub fn negative(&self, idx: usize) -> usize {
        self.negatives[idx]
    }

    /// `|Ω| = L²`, the factor in front of every Parseval sum.
    pub fn area(&self) -> f64 {
        self.length * self.length
    }

    /// Indices `i` with `i < negative(i)`: one representative per conjugate pair.
    pub fn half_modes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.modes.len()).filter(|&i| i < self.negatives[i])
    }

    pub(crate) fn grid_fft(&self) -> &Fft2 {
        &self.grid
    }

    pub(crate) fn grid_slot(&self, idx: usize) -> usize {
        self.grid_slots[idx]
    }

    pub(crate) fn quartic_fft(&self) -> &Fft2 {
        &self.quartic
    }

    pub(crate) fn quartic_slot(&self, idx: usize) -> usize {
        self.quartic_slots[idx]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_count_and_order() {
        let b = Basis::new(2, 1.0).unwrap();
        assert_eq!(b.num_modes(), 24);
        assert_eq!(b.modes()[0], [-2, -2]);
        assert_eq!(b.modes()[23], [2, 2]);
        for (i, k) in b.modes().iter().enumerate() {
            assert_eq!(b.index_of(*k), Some(i));
            let neg = b.modes()[b.negative(i)];
            assert_eq!(neg, [-k[0], -k[1]]);
        }
        assert_eq!(b.index_of([0, 0]), None);
        assert_eq!(b.index_of([3, 0]), None);
    }

    #[test]
    fn padded_grid_meets_the_three_halves_rule() {
        for n in 1..10 {
            let b = Basis::new(n, 0.1).unwrap();
            assert!(b.grid_size() as f64 >= 1.5 * (2 * n + 1) as f64);
            assert!(b.grid_size() > 3 * n);
            assert!(b.quartic_grid_size() > 4 * n);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Basis::new(0, 1.0).is_err());
        assert!(Basis::new(2, 0.0).is_err());
        assert!(Basis::with_options(2, -1.0, 1.0, 1.5).is_err());
        assert!(Basis::with_options(2, 1.0, 1.0, 1.2).is_err());
    }

    #[test]
    fn polarisation_is_orthogonal_to_wavevector() {
        let b = Basis::with_options(3, 3.0, 0.5, 2.0).unwrap();
        for i in 0..b.num_modes() {
            let k = b.wavevector(i);
            let e = b.polarisation(i);
            assert!((k[0] * e[0] + k[1] * e[1]).abs() < 1e-15);
            assert!((e[0] * e[0] + e[1] * e[1] - 1.0).abs() < 1e-15);
        }
    }
}
