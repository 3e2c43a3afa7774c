//! Binary trajectory snapshots.
//!
//! Layout, all little endian: the magic `NSE1`, `N: u64`, `n_steps: u64`,
//! `dt: f64`, `nu: f64`, then for every node and every mode in canonical
//! order the real and imaginary parts as `f64`.

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::spectral::{Basis, SpectralField};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"NSE1";

pub fn write_snapshot<W: Write>(traj: &Trajectory, mut w: W) -> Result<()> {
    let basis = traj.basis();
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&(basis.n() as u64).to_le_bytes())?;
    w.write_all(&(traj.n_steps() as u64).to_le_bytes())?;
    w.write_all(&traj.dt().to_le_bytes())?;
    w.write_all(&basis.nu().to_le_bytes())?;
    for f in traj.fields() {
        for c in f.coeffs() {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Reads a snapshot. The domain length is not stored: pass the basis it was
/// written with, or `None` for the `2π` torus.
pub fn read_snapshot<R: Read>(mut r: R, basis: Option<&Arc<Basis>>) -> Result<Trajectory> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Format(format!("bad snapshot magic {magic:?}")));
    }
    let n = read_u64(&mut r)? as usize;
    let n_steps = read_u64(&mut r)? as usize;
    let dt = read_f64(&mut r)?;
    let nu = read_f64(&mut r)?;
    let basis = match basis {
        Some(b) => {
            if b.n() != n || b.nu() != nu {
                return Err(Error::Format(format!(
                    "snapshot has N = {n}, nu = {nu}; supplied basis has N = {}, nu = {}",
                    b.n(),
                    b.nu()
                )));
            }
            b.clone()
        }
        None => Basis::new(n, nu)?,
    };
    let modes = basis.num_modes();
    let mut fields = Vec::with_capacity(n_steps + 1);
    for _ in 0..=n_steps {
        let mut coeffs = Vec::with_capacity(modes);
        for _ in 0..modes {
            let re = read_f64(&mut r)?;
            let im = read_f64(&mut r)?;
            coeffs.push(Complex64::new(re, im));
        }
        fields.push(SpectralField::from_raw(&basis, coeffs));
    }
    Trajectory::new(0.0, dt, fields)
}
