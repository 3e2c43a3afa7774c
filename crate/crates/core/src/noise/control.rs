//! Controls on `marks × time nodes`, the entropy cost `L_T` and the control classes.

use serde::{Deserialize, Serialize};

use crate::dynamics::TimeGrid;
use crate::error::{Error, Result};

/// Which of the two parametrisations the values hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControlKind {
    /// Moderate-deviation control `ψ`.
    Psi,
    /// Jump intensity `φ = 1 + a(ε) ψ`.
    Phi,
}

/// Real values `v(y_i, t_n)`, stored mark-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlField {
    kind: ControlKind,
    a_eps: Option<f64>,
    n_marks: usize,
    n_nodes: usize,
    values: Vec<f64>,
}

impl ControlField {
    pub fn new(kind: ControlKind, n_marks: usize, n_nodes: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_marks * n_nodes {
            return Err(Error::InvalidParameter(format!(
                "control needs {} values, got {}",
                n_marks * n_nodes,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("control value {v} is not finite")));
        }
        if kind == ControlKind::Phi {
            if let Some(pos) = values.iter().position(|v| *v < 0.0) {
                return Err(Error::NegativeIntensity {
                    value: values[pos],
                    mark: pos / n_nodes,
                    node: pos % n_nodes,
                });
            }
        }
        Ok(Self { kind, a_eps: None, n_marks, n_nodes, values })
    }

    pub fn zeros_psi(n_marks: usize, n_nodes: usize) -> Self {
        Self { kind: ControlKind::Psi, a_eps: None, n_marks, n_nodes, values: vec![0.0; n_marks * n_nodes] }
    }

    /// `φ ≡ 1`.
    pub fn unit_phi(n_marks: usize, n_nodes: usize) -> Self {
        Self { kind: ControlKind::Phi, a_eps: None, n_marks, n_nodes, values: vec![1.0; n_marks * n_nodes] }
    }

    pub fn from_fn_psi(n_marks: usize, grid: &TimeGrid, f: impl Fn(usize, f64) -> f64) -> Self {
        let values = Self::tabulate(n_marks, grid, f);
        Self { kind: ControlKind::Psi, a_eps: None, n_marks, n_nodes: grid.n_nodes(), values }
    }

    pub fn from_fn_phi(n_marks: usize, grid: &TimeGrid, f: impl Fn(usize, f64) -> f64) -> Result<Self> {
        Self::new(ControlKind::Phi, n_marks, grid.n_nodes(), Self::tabulate(n_marks, grid, f))
    }

    fn tabulate(n_marks: usize, grid: &TimeGrid, f: impl Fn(usize, f64) -> f64) -> Vec<f64> {
        let mut values = Vec::with_capacity(n_marks * grid.n_nodes());
        for i in 0..n_marks {
            for n in 0..grid.n_nodes() {
                values.push(f(i, grid.time(n)));
            }
        }
        values
    }

    /// Attaches the deviation scale used to convert between `ψ` and `φ`.
    pub fn with_scale(mut self, a_eps: f64) -> Self {
        self.a_eps = Some(a_eps);
        self
    }

    pub fn kind(&self) -> ControlKind {
        self.kind
    }

    pub fn scale(&self) -> Option<f64> {
        self.a_eps
    }

    pub fn n_marks(&self) -> usize {
        self.n_marks
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, mark: usize, node: usize) -> f64 {
        self.values[mark * self.n_nodes + node]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn require_scale(&self) -> Result<f64> {
        self.a_eps.ok_or_else(|| Error::InvalidParameter("control has no deviation scale a(eps) attached".into()))
    }

    /// `φ = 1 + a ψ`; errors if the result would be negative.
    pub fn to_phi(&self) -> Result<ControlField> {
        match self.kind {
            ControlKind::Phi => Ok(self.clone()),
            ControlKind::Psi => {
                let a = self.require_scale()?;
                let values = self.values.iter().map(|p| 1.0 + a * p).collect();
                Ok(Self::new(ControlKind::Phi, self.n_marks, self.n_nodes, values)?.with_scale(a))
            }
        }
    }

    /// `ψ = (φ - 1) / a`.
    pub fn to_psi(&self) -> Result<ControlField> {
        match self.kind {
            ControlKind::Psi => Ok(self.clone()),
            ControlKind::Phi => {
                let a = self.require_scale()?;
                let values = self.values.iter().map(|p| (p - 1.0) / a).collect();
                Ok(Self { kind: ControlKind::Psi, a_eps: Some(a), n_marks: self.n_marks, n_nodes: self.n_nodes, values })
            }
        }
    }

    pub(crate) fn check_shape(&self, n_marks: usize, grid: &TimeGrid) -> Result<()> {
        if self.n_marks != n_marks || self.n_nodes != grid.n_nodes() {
            return Err(Error::GridMismatch(format!(
                "control is {} marks x {} nodes, expected {} x {}",
                self.n_marks,
                self.n_nodes,
                n_marks,
                grid.n_nodes()
            )));
        }
        Ok(())
    }

    /// `⟨self, other⟩_{L²(ϑ_T)}` with trapezoid weights in time.
    pub fn inner_l2(&self, other: &ControlField, weights: &[f64], grid: &TimeGrid) -> f64 {
        let mut s = 0.0;
        for (i, w) in weights.iter().enumerate() {
            for n in 0..self.n_nodes {
                s += self.value(i, n) * other.value(i, n) * w * grid.weight(n);
            }
        }
        s
    }

    /// `‖self‖²_{L²(ϑ_T)}`.
    pub fn l2_norm_sq(&self, weights: &[f64], grid: &TimeGrid) -> f64 {
        self.inner_l2(self, weights, grid)
    }

    pub fn scaled(&self, alpha: f64) -> ControlField {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `self += alpha * other` (values only; kinds must agree).
    pub fn axpy(&mut self, alpha: f64, other: &ControlField) {
        debug_assert_eq!(self.values.len(), other.values.len());
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> ControlField {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = f(*v));
        out
    }

    /// Persists as CSV rows `mark_index,step,value`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "mark_index,step,value")?;
        for i in 0..self.n_marks {
            for n in 0..self.n_nodes {
                writeln!(w, "{i},{n},{}", self.value(i, n))?;
            }
        }
        Ok(())
    }
}

/// `l(r) = r log r - r + 1` with `l(0) = 1`.
pub fn entropy_l(r: f64) -> f64 {
    if r == 0.0 {
        return 1.0;
    }
    let x = r - 1.0;
    if x.abs() < 0.1 {
        // l(1 + x) = Σ_{j≥2} (-1)^j x^j / (j (j - 1))
        let mut pow = x * x;
        let mut sum = 0.0;
        for j in 2..30 {
            let jf = j as f64;
            let term = pow / (jf * (jf - 1.0));
            sum += if j % 2 == 0 { term } else { -term };
            pow *= x;
        }
        sum
    } else {
        r * r.ln() - r + 1.0
    }
}

/// `L_T(φ) = Σ_{i,n} l(φ(y_i, t_n)) ϑ_i w_n`.
pub fn cost_lt(phi: &ControlField, weights: &[f64], grid: &TimeGrid) -> Result<f64> {
    phi.check_shape(weights.len(), grid)?;
    let phi = phi.to_phi()?;
    let mut total = 0.0;
    for (i, w) in weights.iter().enumerate() {
        let mut row = 0.0;
        for n in 0..phi.n_nodes() {
            let v = phi.value(i, n);
            if v < 0.0 {
                return Err(Error::NegativeIntensity { value: v, mark: i, node: n });
            }
            row += entropy_l(v) * grid.weight(n);
        }
        total += row * w;
    }
    Ok(total)
}

/// `L_T(φ) <= M a(ε)²`, i.e. `φ ∈ S^M_{+,ε}`.
pub fn control_class_check(phi: &ControlField, bound: f64, a_eps: f64, weights: &[f64], grid: &TimeGrid) -> Result<bool> {
    Ok(cost_lt(phi, weights, grid)? <= bound * a_eps * a_eps)
}

/// `ψ · 1{|ψ| <= β / a(ε)}` entrywise.
pub fn psi_truncate(psi: &ControlField, beta: f64, a_eps: f64) -> Result<ControlField> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidParameter(format!("beta must lie in (0, 1], got {beta}")));
    }
    let psi = psi.to_psi()?;
    let cut = beta / a_eps;
    Ok(psi.map_values(|v| if v.abs() <= cut { v } else { 0.0 }))
}
