//! Stokes operator, Leray projection and the dealiased advection terms.
//!
//! Every quadratic product is formed on the padded grid of the basis, so the
//! retained modes of `(u·∇)v` are exact convolution sums and the trilinear
//! form inherits its antisymmetry at round-off level.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{PhysicalVectorField, SpectralField};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `A u`, i.e. `ν|κ|² c_k` per mode.
pub fn apply_stokes(u: &SpectralField) -> SpectralField {
    let b = u.basis();
    let diag: Vec<f64> = (0..b.num_modes()).map(|i| b.stokes_eigenvalue(i)).collect();
    u.map_diag(&diag)
}

/// Velocity and velocity gradient on the padded grid; `grad[i][j] = ∂_j u_i`.
struct Sampled {
    u: [Vec<f64>; 2],
    grad: [[Vec<f64>; 2]; 2],
}

enum Need {
    Velocity,
    Gradient,
    Both,
}

fn sample(field: &SpectralField, need: Need) -> Sampled {
    let basis = field.basis();
    let fft = basis.grid_fft();
    let m = fft.size();
    let len = m * m;
    // Two real fields per complex transform: ifft(A + iB) = a + ib.
    let pack = |comp_a: &dyn Fn(usize) -> Complex64, comp_b: &dyn Fn(usize) -> Complex64| {
        let mut buf = vec![Complex64::default(); len];
        for i in 0..basis.num_modes() {
            buf[basis.grid_slot(i)] = comp_a(i) + I * comp_b(i);
        }
        fft.inverse(&mut buf);
        let re = buf.iter().map(|z| z.re).collect::<Vec<_>>();
        let im = buf.iter().map(|z| z.im).collect::<Vec<_>>();
        (re, im)
    };
    let vel = |c: usize| move |i: usize| field.velocity_hat(i)[c];
    let dvel = |c: usize, d: usize| move |i: usize| I * basis.wavevector(i)[d] * field.velocity_hat(i)[c];

    let empty = || vec![];
    let u = match need {
        Need::Gradient => [empty(), empty()],
        _ => {
            let (x, y) = pack(&vel(0), &vel(1));
            [x, y]
        }
    };
    let grad = match need {
        Need::Velocity => [[empty(), empty()], [empty(), empty()]],
        _ => {
            let (a, b) = pack(&dvel(0, 0), &dvel(0, 1));
            let (c, d) = pack(&dvel(1, 0), &dvel(1, 1));
            [[a, b], [c, d]]
        }
    };
    Sampled { u, grad }
}

/// Fourier-transforms a physical vector field, drops everything outside the
/// truncation and keeps the divergence-free part of each retained mode.
fn project_grid(field_basis: &std::sync::Arc<crate::spectral::Basis>, wx: &[f64], wy: &[f64]) -> SpectralField {
    let fft = field_basis.grid_fft();
    let m = fft.size();
    let mut buf: Vec<Complex64> = wx.iter().zip(wy).map(|(&x, &y)| Complex64::new(x, y)).collect();
    fft.forward(&mut buf);
    let norm = 1.0 / (m * m) as f64;
    let coeffs = (0..field_basis.num_modes())
        .map(|i| {
            let z = buf[field_basis.grid_slot(i)] * norm;
            let zn = buf[field_basis.grid_slot(field_basis.negative(i))].conj() * norm;
            let wxh = 0.5 * (z + zn);
            let wyh = -0.5 * I * (z - zn);
            let e = field_basis.polarisation(i);
            -I * (wxh * e[0] + wyh * e[1])
        })
        .collect();
    SpectralField::from_raw(field_basis, coeffs)
}

/// `P_H` of a vector field sampled on the basis' padded grid.
pub fn project_leray(basis: &std::sync::Arc<crate::spectral::Basis>, raw: &PhysicalVectorField) -> Result<SpectralField> {
    let m = basis.grid_size();
    if raw.m != m || raw.x.len() != m * m || raw.y.len() != m * m {
        return Err(Error::GridMismatch(format!(
            "expected a {m}x{m} grid, got m = {} with {} / {} samples",
            raw.m,
            raw.x.len(),
            raw.y.len()
        )));
    }
    Ok(project_grid(basis, &raw.x, &raw.y))
}

/// `B(u, v) = P_H((u·∇)v)`.
pub fn nonlinear_b(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    u.check_basis(v)?;
    let su = sample(u, Need::Velocity);
    let sv = sample(v, Need::Gradient);
    let len = su.u[0].len();
    let mut wx = vec![0.0; len];
    let mut wy = vec![0.0; len];
    for p in 0..len {
        let (ux, uy) = (su.u[0][p], su.u[1][p]);
        wx[p] = ux * sv.grad[0][0][p] + uy * sv.grad[0][1][p];
        wy[p] = ux * sv.grad[1][0][p] + uy * sv.grad[1][1][p];
    }
    Ok(project_grid(u.basis(), &wx, &wy))
}

/// `b(u, v, w) = ∫ u_i ∂_i v_j w_j dx`.
pub fn trilinear_b(u: &SpectralField, v: &SpectralField, w: &SpectralField) -> Result<f64> {
    u.check_basis(w)?;
    Ok(nonlinear_b(u, v)?.inner_h_unchecked(w))
}

/// `B(η, base) + B(base, η)`: the linearisation of `B` at `base` applied to `η`.
pub fn linearized_advection(base: &SpectralField, eta: &SpectralField) -> Result<SpectralField> {
    base.check_basis(eta)?;
    let sb = sample(base, Need::Both);
    let se = sample(eta, Need::Both);
    let len = sb.u[0].len();
    let mut wx = vec![0.0; len];
    let mut wy = vec![0.0; len];
    for p in 0..len {
        let (ex, ey) = (se.u[0][p], se.u[1][p]);
        let (bx, by) = (sb.u[0][p], sb.u[1][p]);
        wx[p] = ex * sb.grad[0][0][p] + ey * sb.grad[0][1][p] + bx * se.grad[0][0][p] + by * se.grad[0][1][p];
        wy[p] = ex * sb.grad[1][0][p] + ey * sb.grad[1][1][p] + bx * se.grad[1][0][p] + by * se.grad[1][1][p];
    }
    Ok(project_grid(base.basis(), &wx, &wy))
}

/// H-adjoint of `η ↦ B(η, base) + B(base, η)`.
///
/// By antisymmetry `⟨B(η,u)+B(u,η), p⟩ = -b(η,p,u) - b(u,p,η)`, so the adjoint is
/// `-P_H[Σ_j u_j ∇p_j + (u·∇)p]`.
pub fn linearized_advection_transpose(base: &SpectralField, p: &SpectralField) -> Result<SpectralField> {
    base.check_basis(p)?;
    let sb = sample(base, Need::Velocity);
    let sp = sample(p, Need::Gradient);
    let len = sb.u[0].len();
    let mut wx = vec![0.0; len];
    let mut wy = vec![0.0; len];
    for q in 0..len {
        let (bx, by) = (sb.u[0][q], sb.u[1][q]);
        let g = &sp.grad;
        // component i: Σ_j u_j ∂_i p_j + Σ_j u_j ∂_j p_i
        wx[q] = -(bx * g[0][0][q] + by * g[1][0][q] + bx * g[0][0][q] + by * g[0][1][q]);
        wy[q] = -(bx * g[0][1][q] + by * g[1][1][q] + bx * g[1][0][q] + by * g[1][1][q]);
    }
    Ok(project_grid(base.basis(), &wx, &wy))
}
