use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Square 2-D complex FFT on an `m × m` grid stored row-major as `buf[ix * m + iy]`.
///
/// Plans are shared; scratch space is allocated per call so one `Fft2` can be
/// used from many workers at once.
#[derive(Clone)]
pub(crate) struct Fft2 {
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fft2").field("m", &self.m).finish()
    }
}

impl Fft2 {
    pub(crate) fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            m,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        }
    }

    pub(crate) fn size(&self) -> usize {
        self.m
    }

    /// Unnormalised `Σ_k a_k e^{+i k·x_j}`.
    pub(crate) fn inverse(&self, buf: &mut [Complex64]) {
        self.run(&self.inverse, buf);
    }

    /// Unnormalised `Σ_j a_j e^{-i k·x_j}`; divide by `m²` for Fourier coefficients.
    pub(crate) fn forward(&self, buf: &mut [Complex64]) {
        self.run(&self.forward, buf);
    }

    fn run(&self, plan: &Arc<dyn Fft<f64>>, buf: &mut [Complex64]) {
        let m = self.m;
        debug_assert_eq!(buf.len(), m * m);
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(buf, &mut scratch);
        transpose_square(buf, m);
        plan.process_with_scratch(buf, &mut scratch);
        transpose_square(buf, m);
    }
}

fn transpose_square(buf: &mut [Complex64], m: usize) {
    for i in 0..m {
        for j in (i + 1)..m {
            buf.swap(i * m + j, j * m + i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_recovers_input() {
        let m = 7;
        let fft = Fft2::new(m);
        let orig: Vec<Complex64> = (0..m * m)
            .map(|i| Complex64::new((i as f64).sin(), (3.0 * i as f64).cos()))
            .collect();
        let mut buf = orig.clone();
        fft.forward(&mut buf);
        fft.inverse(&mut buf);
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a / (m * m) as f64 - b).norm() < 1e-13);
        }
    }

    #[test]
    fn single_wave_lands_in_one_bin() {
        let m = 6;
        let fft = Fft2::new(m);
        let (k1, k2) = (2usize, 5usize);
        let mut buf: Vec<Complex64> = (0..m * m)
            .map(|idx| {
                let (ix, iy) = (idx / m, idx % m);
                let phase = 2.0 * std::f64::consts::PI * ((k1 * ix + k2 * iy) as f64) / m as f64;
                Complex64::from_polar(1.0, phase)
            })
            .collect();
        fft.forward(&mut buf);
        for (idx, v) in buf.iter().enumerate() {
            let expect = if idx == k1 * m + k2 { (m * m) as f64 } else { 0.0 };
            assert!((v.re - expect).abs() < 1e-10 && v.im.abs() < 1e-10);
        }
    }
}
