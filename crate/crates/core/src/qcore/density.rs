use nalgebra::{Matrix2, Vector3};
use num_complex::Complex64 as C64;

use super::pauli::{self, PauliVector};
use crate::error::{Error, Result};

/// A single-qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2(Matrix2<C64>);

impl DensityMatrix2 {
    /// Validates Hermiticity, unit trace and eigenvalues ≥ −1e-10.
    pub fn new(m: Matrix2<C64>) -> Result<Self> {
        let herm = (m - m.adjoint()).norm();
        if herm > 1e-10 {
            return Err(Error::invalid(format!("density matrix is not Hermitian ({herm:.3e})")));
        }
        let tr = m.trace();
        if (tr - C64::from(1.0)).norm() > 1e-10 {
            return Err(Error::invalid(format!("density matrix trace is {tr}")));
        }
        let rho = Self(m);
        if rho.min_eigenvalue() < -1e-10 {
            return Err(Error::invalid("density matrix has a negative eigenvalue"));
        }
        Ok(rho)
    }

    /// `(I + r·σ)/2`; `|r| ≤ 1` is required.
    pub fn from_bloch(r: Vector3<f64>) -> Result<Self> {
        if r.norm() > 1.0 + 1e-10 {
            return Err(Error::invalid(format!("Bloch vector length {} exceeds 1", r.norm())));
        }
        Ok(Self(bloch_matrix(r)))
    }

    pub fn pure_z(up: bool) -> Self {
        let s = if up { 1.0 } else { -1.0 };
        Self(bloch_matrix(Vector3::new(0.0, 0.0, s)))
    }

    pub fn maximally_mixed() -> Self {
        Self(pauli::identity() * C64::from(0.5))
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.0
    }

    pub fn bloch(&self) -> Vector3<f64> {
        PauliVector::from_operator(&self.0).0 * 2.0
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    pub fn trace_distance(&self, other: &DensityMatrix2) -> f64 {
        0.5 * (self.bloch() - other.bloch()).norm()
    }

    fn min_eigenvalue(&self) -> f64 {
        let (lo, _) = hermitian_eigenvalues(&self.0);
        lo
    }
}

pub(crate) fn bloch_matrix(r: Vector3<f64>) -> Matrix2<C64> {
    (pauli::identity() + PauliVector(r).operator()) * C64::from(0.5)
}

/// Eigenvalues (ascending) of a 2×2 Hermitian matrix.
fn hermitian_eigenvalues(m: &Matrix2<C64>) -> (f64, f64) {
    let mean = 0.5 * (m[(0, 0)].re + m[(1, 1)].re);
    let half_diff = 0.5 * (m[(0, 0)].re - m[(1, 1)].re);
    let radius = (half_diff * half_diff + m[(0, 1)].norm_sqr()).sqrt();
    (mean - radius, mean + radius)
}

/// Most likely physical state for a trace-one Hermitian estimate under additive
/// Gaussian noise: eigenvalues below zero are zeroed and their deficit spread
/// evenly over the remaining ones (largest first).
pub fn mle_density(raw: &Matrix2<C64>) -> Result<DensityMatrix2> {
    let herm = (raw - raw.adjoint()).norm();
    if herm > 1e-9 {
        return Err(Error::invalid(format!("input is not Hermitian ({herm:.3e})")));
    }
    let tr = raw.trace();
    if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
        return Err(Error::invalid(format!("input trace is {tr}, expected 1")));
    }
    let m = (raw + raw.adjoint()) * C64::from(0.5);
    if hermitian_eigenvalues(&m).0 >= 0.0 {
        return Ok(DensityMatrix2(m));
    }

    // 2×2 Hermitian with unit trace: m = (tr I + r·σ)/2, eigenvectors are the
    // Bloch directions ±r̂ with eigenvalues (tr ± |r|)/2.
    let r = PauliVector::from_operator(&m).0 * 2.0;
    let tr = m.trace().re;
    let len = r.norm();
    let mut eig = [0.5 * (tr + len), 0.5 * (tr - len)];
    let mut kept = eig.len();
    let mut deficit = 0.0;
    while kept > 0 && eig[kept - 1] + deficit / (kept as f64) < 0.0 {
        deficit += eig[kept - 1];
        eig[kept - 1] = 0.0;
        kept -= 1;
    }
    for e in eig.iter_mut().take(kept) {
        *e += deficit / kept as f64;
    }
    // Reassemble from the eigenbasis along r̂.
    let dir = if len > 0.0 { r / len } else { Vector3::z() };
    let bloch = dir * (eig[0] - eig[1]);
    Ok(DensityMatrix2(bloch_matrix(bloch)))
}
