use nalgebra::{Matrix2, Vector3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

pub fn identity() -> Matrix2<C64> {
    Matrix2::new(ONE, ZERO, ZERO, ONE)
}

pub fn sigma_x() -> Matrix2<C64> {
    Matrix2::new(ZERO, ONE, ONE, ZERO)
}

pub fn sigma_y() -> Matrix2<C64> {
    Matrix2::new(ZERO, -I, I, ZERO)
}

pub fn sigma_z() -> Matrix2<C64> {
    Matrix2::new(ONE, ZERO, ZERO, -ONE)
}

/// `{I, σx, σy, σz}` in that order.
pub fn pauli_basis() -> [Matrix2<C64>; 4] {
    [identity(), sigma_x(), sigma_y(), sigma_z()]
}

/// Coefficients `(cx, cy, cz)` of a traceless Hermitian operator `c·σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliVector(pub Vector3<f64>);

impl PauliVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self(Vector3::new(x, y, z))
    }

    pub fn x_hat() -> Self {
        Self::new(1.0, 0.0, 0.0)
    }

    pub fn y_hat() -> Self {
        Self::new(0.0, 1.0, 0.0)
    }

    pub fn z_hat() -> Self {
        Self::new(0.0, 0.0, 1.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn operator(&self) -> Matrix2<C64> {
        sigma_x() * C64::from(self.0.x) + sigma_y() * C64::from(self.0.y) + sigma_z() * C64::from(self.0.z)
    }

    /// Projects `m` onto the Pauli components, `c_i = ½ Re Tr(σ_i m)`.
    pub fn from_operator(m: &Matrix2<C64>) -> Self {
        let c = |s: Matrix2<C64>| 0.5 * (s * m).trace().re;
        Self::new(c(sigma_x()), c(sigma_y()), c(sigma_z()))
    }
}

impl From<Vector3<f64>> for PauliVector {
    fn from(v: Vector3<f64>) -> Self {
        Self(v)
    }
}
