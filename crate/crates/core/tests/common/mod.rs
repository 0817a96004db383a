//! Generators and oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use dcg_core::pulse::PulseSequence;
use dcg_core::qcore::QuantumChannel;
use dcg_core::scqc::{curve_from_binormal, error_curve_from_pulse, frenet_from_tangent, stereographic_project, BinormalCurve};
use nalgebra::{DMatrix, Matrix2, Matrix4, Vector2};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Smooth closed-form planar curve: a radius wobbling around `rho0` swept
/// by a monotone angle. Its stereographic image is a smooth binormal with
/// nowhere-vanishing velocity.
#[derive(Debug, Clone)]
pub struct Wobble {
    pub rho0: f64,
    pub rho_amp: f64,
    pub rho_freq: f64,
    pub turns: f64,
    pub angle_amp: f64,
    pub phase: f64,
}

impl Wobble {
    /// Maps six numbers in [0, 1) onto the parameter box.
    pub fn from_unit(u: [f64; 6]) -> Self {
        let turns = 0.5 + 1.5 * u[3];
        Self {
            rho0: 0.3 + 2.7 * u[0],
            rho_amp: 0.3 * u[1],
            rho_freq: 1.0 + 2.0 * u[2],
            turns,
            // keeps dθ/ds = 2π(turns + a cos) > 0
            angle_amp: 0.9 * turns * u[4],
            phase: 2.0 * PI * u[5],
        }
    }

    fn point(&self, s: f64) -> Vector2<f64> {
        let rho = self.rho0 * (1.0 + self.rho_amp * (2.0 * PI * self.rho_freq * s + self.phase).sin());
        let theta = 2.0 * PI * self.turns * s + self.angle_amp * (2.0 * PI * s).sin();
        Vector2::new(rho * theta.cos(), rho * theta.sin())
    }

    pub fn binormal(&self, duration: f64, n: usize) -> BinormalCurve {
        let dt = duration / (n - 1) as f64;
        let pts = (0..n).map(|k| stereographic_project(self.point(k as f64 / (n - 1) as f64))).collect();
        BinormalCurve::new(dt, pts).unwrap()
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s[s.len() / 2]
}

/// Largest relative deviation of |τ| from 2π ΔE_Z on the generated space
/// curve, and the fraction of samples checked. Torsion is undefined where
/// the curvature vanishes, so samples below a tenth of the median curvature
/// are skipped, as are the ends where the stencils are one-sided.
pub fn torsion_error(w: &Wobble, dez: f64, duration: f64) -> (f64, f64) {
    let b = w.binormal(duration, 4001);
    let r = curve_from_binormal(&b, dez).unwrap();
    let (kappa, tau) = frenet_from_tangent(&r.tangent, r.dt);
    let expected = 2.0 * PI * dez;
    let floor = 0.1 * median(&kappa);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for i in 8..tau.len() - 8 {
        if kappa[i] >= floor {
            checked += 1;
            worst = worst.max((tau[i].abs() / expected - 1.0).abs());
        }
    }
    (worst, checked as f64 / tau.len() as f64)
}

/// Largest relative deviation of the error-curve curvature from 2π J over
/// the interiors of the pulse segments.
pub fn curvature_error(seq: &PulseSequence) -> f64 {
    let c = error_curve_from_pulse(seq, 0.01).unwrap();
    let (kappa, _) = frenet_from_tangent(&c.tangent, c.dt);
    let mut start = 0.0;
    let mut worst = 0.0f64;
    for s in seq.segments() {
        let end = start + s.duration;
        let margin = 0.05 * s.duration + 5.0 * c.dt;
        let expected = 2.0 * PI * s.exchange;
        for (k, kp) in kappa.iter().enumerate() {
            let t = k as f64 * c.dt;
            if t > start + margin && t < end - margin {
                worst = worst.max((kp / expected - 1.0).abs());
            }
        }
        start = end;
    }
    worst
}

/// Channel with two Kraus operators cut from a random 4×2 isometry.
pub fn random_channel(seed: u64) -> QuantumChannel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = || {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re, im)
    };
    let a = DMatrix::from_fn(4, 2, |_, _| g());
    let q = a.qr().q();
    let kraus = [0, 2].map(|r| Matrix2::new(q[(r, 0)], q[(r, 1)], q[(r + 1, 0)], q[(r + 1, 1)]));
    let superop: Matrix4<C64> = kraus.iter().map(|k| k.conjugate().kronecker(k)).sum();
    QuantumChannel::from_superoperator(superop)
}
