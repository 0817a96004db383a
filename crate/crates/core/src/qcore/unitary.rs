use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::ops::Mul;

use nalgebra::{Matrix2, Matrix3};
use num_complex::Complex64 as C64;

use super::pauli::{self, PauliVector};
use crate::error::{Error, Result};

/// MHz·ns → cycles. The only place where the frequency/time units meet.
pub const MHZ_NS: f64 = 1e-3;

/// A 2×2 unitary. Global phase is not fixed; comparisons happen at channel level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2(Matrix2<C64>);

impl Unitary2 {
    pub const UNITARITY_TOL: f64 = 1e-12;

    pub fn new(m: Matrix2<C64>) -> Result<Self> {
        let defect = (m.adjoint() * m - pauli::identity()).norm();
        if !defect.is_finite() || defect > 1e-10 {
            return Err(Error::invalid(format!("matrix is not unitary (|U†U - I| = {defect:.3e})")));
        }
        Ok(Self(m))
    }

    #[cfg(test)]
    pub(crate) fn from_matrix_unchecked(m: Matrix2<C64>) -> Self {
        Self(m)
    }

    pub fn identity() -> Self {
        Self(pauli::identity())
    }

    pub fn pauli_x() -> Self {
        Self(pauli::sigma_x())
    }

    pub fn pauli_y() -> Self {
        Self(pauli::sigma_y())
    }

    pub fn pauli_z() -> Self {
        Self(pauli::sigma_z())
    }

    /// `(σx + σz)/√2`.
    pub fn hadamard() -> Self {
        Self((pauli::sigma_x() + pauli::sigma_z()) * C64::from(FRAC_1_SQRT_2))
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn det(&self) -> C64 {
        self.0[(0, 0)] * self.0[(1, 1)] - self.0[(0, 1)] * self.0[(1, 0)]
    }

    /// Re-normalizes to the nearest SU(2)-shaped unitary, removing accumulated
    /// round-off from long products.
    pub fn renormalized(&self) -> Self {
        let d = self.det().sqrt();
        let m = self.0 / d;
        let a = (m[(0, 0)] + m[(1, 1)].conj()) * 0.5;
        let b = (m[(0, 1)] - m[(1, 0)].conj()) * 0.5;
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (a, b) = (a / n, b / n);
        Self(Matrix2::new(a, b, -b.conj(), a.conj()) * d)
    }

    /// The rotation `R` with `U†(v·σ)U = (R v)·σ`.
    pub fn heisenberg_rotation(&self) -> Matrix3<f64> {
        let basis = [pauli::sigma_x(), pauli::sigma_y(), pauli::sigma_z()];
        let u = &self.0;
        let ud = u.adjoint();
        Matrix3::from_fn(|i, j| 0.5 * (basis[i] * ud * basis[j] * u).trace().re)
    }

    /// `|Tr(U†V)|²/4`.
    pub fn overlap_fidelity(&self, other: &Unitary2) -> f64 {
        (self.0.adjoint() * other.0).trace().norm_sqr() / 4.0
    }
}

impl Mul for Unitary2 {
    type Output = Unitary2;
    fn mul(self, rhs: Unitary2) -> Unitary2 {
        Unitary2(self.0 * rhs.0)
    }
}

impl Mul for &Unitary2 {
    type Output = Unitary2;
    fn mul(self, rhs: &Unitary2) -> Unitary2 {
        Unitary2(self.0 * rhs.0)
    }
}

/// Free evolution under `H = (h/2)(J σz + ΔE_Z σx)` for `dt` ns with `J`, `ΔE_Z`
/// in MHz: `U = cos θ I − i sin θ (n̂·σ)`, `θ = π f dt·10⁻³`, `f = √(J² + ΔE_Z²)`.
pub fn su2_evolve(j: f64, dez: f64, dt: f64) -> Result<Unitary2> {
    if !(dt >= 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("duration must be non-negative, got {dt}")));
    }
    if !j.is_finite() || !dez.is_finite() {
        return Err(Error::invalid("exchange and Zeeman gradient must be finite"));
    }
    Ok(evolve_unchecked(j, dez, dt))
}

#[inline]
pub(crate) fn evolve_unchecked(j: f64, dez: f64, dt: f64) -> Unitary2 {
    let f = j.hypot(dez);
    if f == 0.0 {
        return Unitary2::identity();
    }
    let theta = PI * f * dt * MHZ_NS;
    let (s, c) = theta.sin_cos();
    let (nx, nz) = (dez / f, j / f);
    // c·I − i s (nx σx + nz σz)
    Unitary2(Matrix2::new(
        C64::new(c, -s * nz),
        C64::new(0.0, -s * nx),
        C64::new(0.0, -s * nx),
        C64::new(c, s * nz),
    ))
}

/// Pauli coefficients of `U†(axis·σ)U`.
pub fn conjugate_pauli(u: &Unitary2, axis: &PauliVector) -> PauliVector {
    let m = u.0.adjoint() * axis.operator() * u.0;
    PauliVector::from_operator(&m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::pauli::I;
    use proptest::prelude::*;

    fn phase_equal(a: &Unitary2, b: &Unitary2, tol: f64) -> bool {
        (1.0 - a.overlap_fidelity(b)).abs() < tol
    }

    #[test]
    fn zeeman_half_period_is_x_gate() {
        let u = su2_evolve(0.0, 2.5, 200.0).unwrap();
        let expect = pauli::sigma_x() * (-I);
        assert!((u.matrix() - expect).norm() < 1e-12);
    }

    #[test]
    fn equal_exchange_quarter_cycle_is_hadamard() {
        let dez = 2.9;
        let dt = 1.0 / (2.0 * 2f64.sqrt() * dez * MHZ_NS);
        let u = su2_evolve(dez, dez, dt).unwrap();
        let expect = Unitary2::hadamard().matrix() * (-I);
        assert!((u.matrix() - expect).norm() < 1e-12);
    }

    #[test]
    fn two_pi_rotation_is_minus_identity() {
        let dez = 2.9;
        let dt = 1.0 / (2f64.sqrt() * dez * MHZ_NS);
        assert!((dt - 243.8).abs() < 0.05);
        let u = su2_evolve(dez, dez, dt).unwrap();
        assert!((u.matrix() + pauli::identity()).norm() < 1e-12);
    }

    #[test]
    fn negative_duration_is_rejected() {
        assert!(matches!(su2_evolve(1.0, 1.0, -1.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn conjugation_examples() {
        let x = PauliVector::x_hat();
        let c = conjugate_pauli(&Unitary2::identity(), &x);
        assert!((c.0 - x.0).norm() < 1e-15);
        let c = conjugate_pauli(&Unitary2::hadamard(), &x);
        assert!((c.0 - PauliVector::z_hat().0).norm() < 1e-15);
        let mix = Unitary2::from_matrix_unchecked(pauli::sigma_x() * (-I));
        let c = conjugate_pauli(&mix, &PauliVector::y_hat());
        assert!((c.0 + PauliVector::y_hat().0).norm() < 1e-15);
    }

    #[test]
    fn rotation_matches_conjugation() {
        let u = su2_evolve(1.3, 2.1, 77.0).unwrap();
        let v = PauliVector::new(0.3, -0.2, 0.9);
        let r = u.heisenberg_rotation();
        assert!((r * v.0 - conjugate_pauli(&u, &v).0).norm() < 1e-13);
        assert!((r.determinant() - 1.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn evolution_composes(j in 0.0..30.0f64, dez in 0.1..5.0f64, t1 in 0.0..500.0f64, t2 in 0.0..500.0f64) {
            let a = su2_evolve(j, dez, t1).unwrap();
            let b = su2_evolve(j, dez, t2).unwrap();
            let ab = su2_evolve(j, dez, t1 + t2).unwrap();
            prop_assert!(((a * b).matrix() - ab.matrix()).norm() < 1e-12);
            prop_assert!(((ab.matrix().adjoint() * ab.matrix()) - pauli::identity()).norm() < 1e-12);
            prop_assert!((ab.det().norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn conjugation_preserves_norm(j in 0.0..30.0f64, dez in 0.1..5.0f64, t in 0.0..500.0f64,
                                      x in -2.0..2.0f64, y in -2.0..2.0f64, z in -2.0..2.0f64) {
            let u = su2_evolve(j, dez, t).unwrap();
            let v = PauliVector::new(x, y, z);
            prop_assert!((conjugate_pauli(&u, &v).norm() - v.norm()).abs() < 1e-12);
        }

        #[test]
        fn renormalization_is_harmless(j in 0.0..30.0f64, dez in 0.1..5.0f64, t in 0.0..500.0f64) {
            let u = su2_evolve(j, dez, t).unwrap();
            prop_assert!(phase_equal(&u, &u.renormalized(), 1e-13));
        }
    }
}
