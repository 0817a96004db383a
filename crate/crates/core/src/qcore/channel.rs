//! Single-qubit channels.
//!
//! The channel is stored as a 4×4 superoperator acting on column-stacked
//! density matrices (`vec(ρ)[a + 2b] = ρ[a, b]`). The Choi matrix is
//! `J = Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|)` (trace 2, partial trace over the output
//! factor equals `I` for trace-preserving maps) and the chi matrix is taken
//! in the unnormalized Pauli basis `{I, σx, σy, σz}`, so that
//! `E(ρ) = Σ χ_mn P_m ρ P_n` and `Tr χ = 1`.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};
use num_complex::Complex64 as C64;

use super::density::DensityMatrix2;
use super::pauli::pauli_basis;
use super::unitary::Unitary2;
use crate::error::{Error, Result};

/// Tolerance used when a channel has to be CPTP before it is consumed.
pub const CPTP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumChannel {
    superop: Matrix4<C64>,
}

impl QuantumChannel {
    pub fn from_superoperator(superop: Matrix4<C64>) -> Self {
        Self { superop }
    }

    pub fn identity() -> Self {
        Self::from_unitary(&Unitary2::identity())
    }

    /// `ρ ↦ I/2` for every input.
    pub fn fully_depolarizing() -> Self {
        Self::from_chi(&(Matrix4::identity() * C64::from(0.25)))
    }

    pub fn from_unitary(u: &Unitary2) -> Self {
        let m = u.matrix();
        Self { superop: m.conjugate().kronecker(m) }
    }

    pub fn superoperator(&self) -> &Matrix4<C64> {
        &self.superop
    }

    pub fn apply(&self, rho: &Matrix2<C64>) -> Matrix2<C64> {
        let v = nalgebra::Vector4::new(rho[(0, 0)], rho[(1, 0)], rho[(0, 1)], rho[(1, 1)]);
        let out = self.superop * v;
        Matrix2::new(out[0], out[2], out[1], out[3])
    }

    pub fn apply_state(&self, rho: &DensityMatrix2) -> Matrix2<C64> {
        self.apply(rho.matrix())
    }

    pub fn choi(&self) -> Matrix4<C64> {
        let s = &self.superop;
        Matrix4::from_fn(|r, c| {
            let (i, a) = (r / 2, r % 2);
            let (j, b) = (c / 2, c % 2);
            s[(a + 2 * b, i + 2 * j)]
        })
    }

    pub fn from_choi(j: &Matrix4<C64>) -> Self {
        let superop = Matrix4::from_fn(|r, c| {
            let (a, b) = (r % 2, r / 2);
            let (i, jj) = (c % 2, c / 2);
            j[(2 * i + a, 2 * jj + b)]
        });
        Self { superop }
    }

    pub fn chi(&self) -> Matrix4<C64> {
        let w = pauli_vec_matrix();
        w.adjoint() * self.choi() * w * C64::from(0.25)
    }

    pub fn from_chi(chi: &Matrix4<C64>) -> Self {
        let w = pauli_vec_matrix();
        Self::from_choi(&(w * chi * w.adjoint()))
    }

    /// `‖Tr_out J − I‖_F`: zero for trace-preserving channels.
    pub fn trace_preservation_defect(&self) -> f64 {
        let j = self.choi();
        (partial_trace_out(&j) - Matrix2::identity()).norm()
    }

    /// Smallest eigenvalue of the Hermitian part of the Choi matrix.
    pub fn choi_min_eigenvalue(&self) -> f64 {
        let j = self.choi();
        let h = (j + j.adjoint()) * C64::from(0.5);
        SymmetricEigen::new(h).eigenvalues.min()
    }

    pub fn is_cptp(&self, tol: f64) -> bool {
        let j = self.choi();
        let herm = (j - j.adjoint()).norm();
        herm <= tol && self.trace_preservation_defect() <= tol && self.choi_min_eigenvalue() >= -tol
    }

    pub fn distance(&self, other: &QuantumChannel) -> f64 {
        (self.choi() - other.choi()).norm()
    }
}

/// Columns are `|P_m⟩⟩` with `|P⟩⟩[2i + a] = P[a, i]`.
fn pauli_vec_matrix() -> Matrix4<C64> {
    let basis = pauli_basis();
    Matrix4::from_fn(|r, m| {
        let (i, a) = (r / 2, r % 2);
        basis[m][(a, i)]
    })
}

fn partial_trace_out(j: &Matrix4<C64>) -> Matrix2<C64> {
    Matrix2::from_fn(|i, k| j[(2 * i, 2 * k)] + j[(2 * i + 1, 2 * k + 1)])
}

/// Convex combination `Σ w_k E_k`.
pub fn average_channels(channels: &[QuantumChannel], weights: &[f64]) -> Result<QuantumChannel> {
    if channels.is_empty() {
        return Err(Error::invalid("cannot average an empty list of channels"));
    }
    if channels.len() != weights.len() {
        return Err(Error::invalid(format!(
            "{} channels but {} weights",
            channels.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::invalid("weights must be non-negative"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!("weights sum to {total}, expected 1")));
    }
    let superop = channels
        .iter()
        .zip(weights)
        .fold(Matrix4::zeros(), |acc, (ch, w)| acc + ch.superop * C64::from(*w));
    Ok(QuantumChannel { superop })
}

#[derive(Debug, Clone, Copy)]
pub struct ProjectionOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self { max_iterations: 10_000, tolerance: 1e-10 }
    }
}

/// Nearest CPTP channel in Frobenius distance between Choi matrices, found by
/// Dykstra's alternating projections between the PSD cone and the affine set
/// `Tr_out J = I`.
pub fn project_cptp(channel: &QuantumChannel) -> Result<QuantumChannel> {
    project_cptp_with(channel, ProjectionOptions::default())
}

pub fn project_cptp_with(channel: &QuantumChannel, opts: ProjectionOptions) -> Result<QuantumChannel> {
    let j0 = channel.choi();
    let mut x = (j0 + j0.adjoint()) * C64::from(0.5);
    let mut p = Matrix4::<C64>::zeros();
    let mut q = Matrix4::<C64>::zeros();
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        let y = project_psd(&(x + p));
        p = x + p - y;
        let x_next = project_trace_preserving(&(y + q));
        q = y + q - x_next;
        residual = (x_next - x).norm();
        x = x_next;
        if residual < opts.tolerance {
            return Ok(QuantumChannel::from_choi(&x));
        }
    }
    Err(Error::ConvergenceFailure { iterations: opts.max_iterations, residual })
}

fn project_psd(m: &Matrix4<C64>) -> Matrix4<C64> {
    let h = (m + m.adjoint()) * C64::from(0.5);
    let eig = SymmetricEigen::new(h);
    if eig.eigenvalues.min() >= 0.0 {
        return h;
    }
    let clipped = eig.eigenvalues.map(|v| C64::from(v.max(0.0)));
    let v = &eig.eigenvectors;
    v * Matrix4::from_diagonal(&clipped) * v.adjoint()
}

fn project_trace_preserving(m: &Matrix4<C64>) -> Matrix4<C64> {
    let defect = partial_trace_out(m) - Matrix2::identity();
    let mut out = *m;
    for i in 0..2 {
        for k in 0..2 {
            let d = defect[(i, k)] * 0.5;
            out[(2 * i, 2 * k)] -= d;
            out[(2 * i + 1, 2 * k + 1)] -= d;
        }
    }
    out
}

/// `Tr(χ_a χ_b)` for unit-trace chi matrices of two CPTP channels.
pub fn process_fidelity(a: &QuantumChannel, b: &QuantumChannel) -> Result<f64> {
    for (name, ch) in [("first", a), ("second", b)] {
        if !ch.is_cptp(CPTP_TOL) {
            return Err(Error::invalid(format!(
                "{name} channel is not CPTP (min Choi eigenvalue {:.3e}, trace defect {:.3e})",
                ch.choi_min_eigenvalue(),
                ch.trace_preservation_defect()
            )));
        }
    }
    let (ca, cb) = (a.chi(), b.chi());
    let f = (ca * cb).trace().re / (ca.trace().re * cb.trace().re);
    Ok(f.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::pauli;
    use crate::qcore::unitary::su2_evolve;
    use proptest::prelude::*;

    fn rank(m: &Matrix4<C64>) -> usize {
        let h = (m + m.adjoint()) * C64::from(0.5);
        SymmetricEigen::new(h).eigenvalues.iter().filter(|v| v.abs() > 1e-10).count()
    }

    #[test]
    fn identity_channel_chi() {
        let chi = QuantumChannel::identity().chi();
        let mut expect = Matrix4::<C64>::zeros();
        expect[(0, 0)] = C64::from(1.0);
        assert!((chi - expect).norm() < 1e-14);
    }

    #[test]
    fn pauli_x_chi_single_entry() {
        let chi = QuantumChannel::from_unitary(&Unitary2::pauli_x()).chi();
        for r in 0..4 {
            for c in 0..4 {
                let expect = if r == 1 && c == 1 { 1.0 } else { 0.0 };
                assert!((chi[(r, c)] - C64::from(expect)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn hadamard_chi_is_rank_one() {
        let ch = QuantumChannel::from_unitary(&Unitary2::hadamard());
        let chi = ch.chi();
        assert_eq!(rank(&chi), 1);
        // Direct Choi construction: J = |U⟩⟩⟨⟨U| with |U⟩⟩[2i + a] = U[a, i].
        let u = Unitary2::hadamard();
        let uvec = nalgebra::Vector4::from_fn(|r, _| u.matrix()[(r % 2, r / 2)]);
        let direct = uvec * uvec.adjoint();
        assert!((ch.choi() - direct).norm() < 1e-14);
        assert!((chi[(1, 1)].re - 0.5).abs() < 1e-14 && (chi[(3, 3)].re - 0.5).abs() < 1e-14);
    }

    #[test]
    fn superoperator_acts_like_conjugation() {
        let u = su2_evolve(2.0, 1.0, 91.0).unwrap();
        let rho = DensityMatrix2::from_bloch(nalgebra::Vector3::new(0.2, 0.5, -0.4)).unwrap();
        let direct = u.matrix() * rho.matrix() * u.matrix().adjoint();
        let ch = QuantumChannel::from_unitary(&u);
        assert!((ch.apply_state(&rho) - direct).norm() < 1e-14);
        // chi round trip
        let back = QuantumChannel::from_chi(&ch.chi());
        assert!((back.superoperator() - ch.superoperator()).norm() < 1e-14);
    }

    #[test]
    fn averaging_examples() {
        let u = su2_evolve(1.0, 2.0, 50.0).unwrap();
        let cu = QuantumChannel::from_unitary(&u);
        let avg = average_channels(&[cu, cu], &[0.5, 0.5]).unwrap();
        assert!((avg.superoperator() - cu.superoperator()).norm() < 1e-15);

        let a = QuantumChannel::from_unitary(&Unitary2::pauli_x());
        let b = QuantumChannel::identity();
        let mix = average_channels(&[a, b], &[0.3, 0.7]).unwrap();
        let expect = a.superoperator() * C64::from(0.3) + b.superoperator() * C64::from(0.7);
        assert!((mix.superoperator() - expect).norm() < 1e-15);

        // I/σz mixture dephases: x and y Bloch components vanish.
        let z = QuantumChannel::from_unitary(&Unitary2::pauli_z());
        let deph = average_channels(&[b, z], &[0.5, 0.5]).unwrap();
        let rho = DensityMatrix2::from_bloch(nalgebra::Vector3::new(0.6, -0.3, 0.5)).unwrap();
        let out = DensityMatrix2::new(deph.apply_state(&rho)).unwrap().bloch();
        assert!(out.x.abs() < 1e-15 && out.y.abs() < 1e-15 && (out.z - 0.5).abs() < 1e-15);
    }

    #[test]
    fn averaging_errors() {
        assert!(average_channels(&[], &[]).is_err());
        let b = QuantumChannel::identity();
        assert!(average_channels(&[b, b], &[0.5, 0.6]).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let id = QuantumChannel::identity();
        assert!((process_fidelity(&id, &QuantumChannel::fully_depolarizing()).unwrap() - 0.25).abs() < 1e-14);
        let x = QuantumChannel::from_unitary(&Unitary2::pauli_x());
        assert!(process_fidelity(&id, &x).unwrap().abs() < 1e-14);
        let h = QuantumChannel::from_unitary(&Unitary2::hadamard());
        assert!((process_fidelity(&h, &h).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fidelity_rejects_non_cptp() {
        let bad = QuantumChannel::from_superoperator(Matrix4::identity() * C64::from(1.5));
        assert!(process_fidelity(&bad, &QuantumChannel::identity()).is_err());
    }

    #[test]
    fn projection_leaves_identity_alone() {
        let id = QuantumChannel::identity();
        let p = project_cptp(&id).unwrap();
        assert!(p.distance(&id) < 1e-10);
    }

    #[test]
    fn fully_depolarizing_is_cptp() {
        let d = QuantumChannel::fully_depolarizing();
        assert!(d.is_cptp(1e-12));
        let rho = DensityMatrix2::pure_z(true);
        assert!((d.apply_state(&rho) - pauli::identity() * C64::from(0.5)).norm() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn fidelity_matches_trace_formula(j1 in 0.0..20.0f64, d1 in 0.1..4.0f64, t1 in 0.0..400.0f64,
                                          j2 in 0.0..20.0f64, d2 in 0.1..4.0f64, t2 in 0.0..400.0f64) {
            let u = su2_evolve(j1, d1, t1).unwrap();
            let v = su2_evolve(j2, d2, t2).unwrap();
            let f = process_fidelity(&QuantumChannel::from_unitary(&u), &QuantumChannel::from_unitary(&v)).unwrap();
            let direct = (u.matrix().adjoint() * v.matrix()).trace().norm_sqr() / 4.0;
            prop_assert!((f - direct).abs() < 1e-10);
            prop_assert!((f - process_fidelity(&QuantumChannel::from_unitary(&v), &QuantumChannel::from_unitary(&u)).unwrap()).abs() < 1e-14);
        }

        #[test]
        fn averaging_preserves_trace(j in 0.0..20.0f64, t in 0.0..400.0f64, w in 0.0..1.0f64) {
            let a = QuantumChannel::from_unitary(&su2_evolve(j, 2.0, t).unwrap());
            let b = QuantumChannel::from_unitary(&su2_evolve(2.0, j, t).unwrap());
            let avg = average_channels(&[a, b], &[w, 1.0 - w]).unwrap();
            prop_assert!(avg.trace_preservation_defect() < 1e-12);
        }
    }
}
