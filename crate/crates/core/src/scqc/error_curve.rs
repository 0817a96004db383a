use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::geometry::{angular_rate, ErrorCurve};
use crate::error::{Error, Result};
use crate::pulse::PulseSequence;
use crate::qcore::{evolve_unchecked, PauliVector, Unitary2};

pub const DEFAULT_SUBSTEP_NS: f64 = 0.1;

/// `K` such that the Heisenberg-picture rotation of a constant segment is
/// `exp(φ t K)` with `φ = 2π√(J² + ΔE_Z²)`.
fn generator(j: f64, dez: f64) -> (f64, Matrix3<f64>) {
    let f = j.hypot(dez);
    if f == 0.0 {
        return (0.0, Matrix3::zeros());
    }
    let (nx, nz) = (dez / f, j / f);
    // −[n̂]×
    let k = Matrix3::new(0.0, nz, 0.0, -nz, 0.0, nx, 0.0, -nx, 0.0);
    (angular_rate(f), k)
}

/// `∫₀^τ exp(φ s K) ds` for a unit-axis skew generator `K`.
fn integrated_rotation(phi: f64, k: &Matrix3<f64>, tau: f64) -> Matrix3<f64> {
    if phi * tau < 1e-8 {
        return Matrix3::identity() * tau + k * (0.5 * phi * tau * tau);
    }
    let (s, c) = (phi * tau).sin_cos();
    Matrix3::identity() * tau + k * ((1.0 - c) / phi) + k * k * (tau - s / phi)
}

/// Endpoint summary of a pulse's error curve, computed segment by segment in
/// closed form.
#[derive(Debug, Clone, Copy)]
pub struct CurveEndpoint {
    /// `r(t_f)` in ns.
    pub r: Vector3<f64>,
    /// `ṙ(t_f)`.
    pub tangent: Vector3<f64>,
    pub unitary: Unitary2,
}

/// Exact `r(t_f)`, `ṙ(t_f)` and `U0(t_f)` for piecewise-constant exchange.
pub fn curve_endpoint(pulse: &PulseSequence) -> CurveEndpoint {
    segments_endpoint(pulse.segments().iter().map(|s| (s.exchange, s.duration)), pulse.dez())
}

pub(crate) fn segments_endpoint(segs: impl IntoIterator<Item = (f64, f64)>, dez: f64) -> CurveEndpoint {
    let mut rot = Matrix3::identity();
    let mut r = Vector3::zeros();
    let mut u = Unitary2::identity();
    for (j, tau) in segs {
        let (phi, k) = generator(j, dez);
        r += rot * integrated_rotation(phi, &k, tau) * Vector3::x();
        let (s, c) = (phi * tau).sin_cos();
        rot *= Matrix3::identity() + k * s + k * k * (1.0 - c);
        u = evolve_unchecked(j, dez, tau) * u;
    }
    CurveEndpoint { r, tangent: rot * Vector3::x(), unitary: u }
}

/// Samples `r(t)` by stepping `U0` at `substep` ns and integrating
/// `ṙ = U0†σxU0` with the trapezoidal rule (exact within each step is not
/// needed: the step is small against `1/f`).
pub fn error_curve_from_pulse(pulse: &PulseSequence, substep: f64) -> Result<ErrorCurve> {
    if !(substep > 0.0) || !substep.is_finite() {
        return Err(Error::invalid(format!("sub-step must be > 0, got {substep}")));
    }
    let dez = pulse.dez();
    let total = pulse.total_duration();
    let n = (total / substep).round().max(1.0) as usize;
    let h = total / n as f64;

    // Segment boundaries on the sub-step grid: each step uses the exchange
    // active over it, split exactly at segment edges.
    let mut edges = Vec::with_capacity(pulse.segments().len());
    let mut t = 0.0;
    for s in pulse.segments() {
        t += s.duration;
        edges.push((t, s.exchange));
    }

    let x = PauliVector::x_hat();
    let mut u = Unitary2::identity();
    let mut tangent = Vec::with_capacity(n + 1);
    let mut r = Vec::with_capacity(n + 1);
    tangent.push(Vector3::x());
    r.push(Vector3::zeros());
    let mut seg = 0;
    for k in 0..n {
        let (mut a, b) = (k as f64 * h, (k + 1) as f64 * h);
        // Walk the step through every segment it overlaps.
        while a < b - 1e-12 {
            while seg + 1 < edges.len() && a >= edges[seg].0 - 1e-12 {
                seg += 1;
            }
            let stop = if seg + 1 < edges.len() { b.min(edges[seg].0) } else { b };
            u = evolve_unchecked(edges[seg].1, dez, stop - a) * u;
            a = stop;
        }
        let tan = crate::qcore::conjugate_pauli(&u, &x).0;
        let prev = tangent[k];
        let next_r = r[k] + (prev + tan) * (0.5 * h);
        tangent.push(tan);
        r.push(next_r);
    }
    let closure_residual = r[n].norm();
    Ok(ErrorCurve { dt: h, r, tangent, final_unitary: Some(u), closure_residual, boundary_mismatch: 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetGate {
    Identity,
    Hadamard,
}

impl std::str::FromStr for TargetGate {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" | "i" => Ok(Self::Identity),
            "hadamard" | "h" => Ok(Self::Hadamard),
            other => Err(Error::invalid(format!("unknown gate label '{other}'"))),
        }
    }
}

impl TargetGate {
    pub fn unitary(&self) -> Unitary2 {
        match self {
            Self::Identity => Unitary2::identity(),
            Self::Hadamard => Unitary2::hadamard(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TangentTarget {
    pub initial: Vector3<f64>,
    pub target_final: Vector3<f64>,
    pub realized_final: Vector3<f64>,
    pub mismatch: f64,
}

/// Boundary condition on `ṙ`: it starts along x̂ and must end along x̂ for the
/// identity, along ẑ for the Hadamard.
pub fn boundary_tangent_target(gate: TargetGate, u0f: &Unitary2) -> TangentTarget {
    let target_final = match gate {
        TargetGate::Identity => Vector3::x(),
        TargetGate::Hadamard => Vector3::z(),
    };
    let realized_final = crate::qcore::conjugate_pauli(u0f, &PauliVector::x_hat()).0;
    TangentTarget {
        initial: Vector3::x(),
        target_final,
        realized_final,
        mismatch: (realized_final - target_final).norm(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{hadamard_time, Segment, SegmentRole};

    fn identity_dcg() -> PulseSequence {
        let mut segs = Vec::new();
        for _ in 0..3 {
            segs.push(Segment::new(0.4, 121.0, SegmentRole::J2));
            segs.push(Segment::new(9.7, 60.0, SegmentRole::J1));
        }
        PulseSequence::new("DCG I", 2.9, segs).unwrap()
    }

    #[test]
    fn closed_form_matches_sampling() {
        let p = identity_dcg();
        let exact = curve_endpoint(&p);
        let c = error_curve_from_pulse(&p, 0.05).unwrap();
        assert!((c.r.last().unwrap() - exact.r).norm() < 1e-3);
        assert!((c.tangent.last().unwrap() - exact.tangent).norm() < 1e-9);
        assert!(c.speed_defect() < 1e-9);
        let prod = p.unitary();
        assert!((c.final_unitary.unwrap().matrix() - prod.matrix()).norm() < 1e-9);
    }

    #[test]
    fn reference_identity_nearly_closes() {
        let p = identity_dcg();
        let e = curve_endpoint(&p);
        assert!(e.r.norm() < 0.05 * p.total_duration(), "{}", e.r.norm());
    }

    #[test]
    fn zero_exchange_is_a_straight_line() {
        let e = segments_endpoint([(0.0, 100.0)], 2.5);
        assert!((e.r - Vector3::new(100.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn uncorrected_hadamard_does_not_close() {
        let p = PulseSequence::uncorrected_hadamard(2.5, 1.0, 1.0).unwrap();
        let c = error_curve_from_pulse(&p, DEFAULT_SUBSTEP_NS).unwrap();
        assert!(c.closure_residual > 0.3 * hadamard_time(2.5));
    }

    #[test]
    fn tangent_targets() {
        let t = boundary_tangent_target(TargetGate::Identity, &Unitary2::identity());
        assert!(t.mismatch < 1e-15);
        let t = boundary_tangent_target(TargetGate::Hadamard, &Unitary2::hadamard());
        assert!(t.mismatch < 1e-15);
        let t = boundary_tangent_target(TargetGate::Hadamard, &Unitary2::identity());
        assert!((t.mismatch - 2f64.sqrt()).abs() < 1e-15);
        assert!("cnot".parse::<TargetGate>().is_err());
    }
}
