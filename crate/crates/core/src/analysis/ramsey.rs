use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{levenberg_marquardt, LmOptions};
use crate::qcore::MHZ_NS;

/// Singlet-return probability against evolution time at one gate voltage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RamseySeries {
    pub times_ns: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub voltage_mv: f64,
}

impl RamseySeries {
    pub fn new(times_ns: Vec<f64>, probabilities: Vec<f64>, voltage_mv: f64) -> Result<Self> {
        if times_ns.len() != probabilities.len() {
            return Err(Error::invalid(format!(
                "{} times but {} probabilities",
                times_ns.len(),
                probabilities.len()
            )));
        }
        if times_ns.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("Ramsey times must be strictly increasing"));
        }
        if let Some(p) = probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
        }
        Ok(Self { times_ns, probabilities, voltage_mv })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RamseyEnvelope {
    /// `exp(−(t/T2*)²)`, quasistatic noise.
    #[default]
    Gaussian,
    /// `exp(−t/T2*)`.
    Exponential,
}

impl RamseyEnvelope {
    fn eval(self, x: f64) -> f64 {
        match self {
            RamseyEnvelope::Gaussian => (-x * x).exp(),
            RamseyEnvelope::Exponential => (-x.abs()).exp(),
        }
    }
}

/// `A cos(2π f t + φ) env(t/T2*) + B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamseyFit {
    pub frequency_mhz: f64,
    pub t2_star_ns: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub offset: f64,
    pub envelope: RamseyEnvelope,
    pub rms_residual: f64,
}

impl RamseyFit {
    pub fn eval(&self, t: f64) -> f64 {
        model(&[self.amplitude, self.frequency_mhz, self.phase, self.t2_star_ns.ln(), self.offset], self.envelope, t)
    }
}

fn model(p: &[f64], env: RamseyEnvelope, t: f64) -> f64 {
    let (a, f, phi, ln_t, b) = (p[0], p[1], p[2], p[3], p[4]);
    a * (2.0 * PI * f * t * MHZ_NS + phi).cos() * env.eval(t / ln_t.exp()) + b
}

/// Peak of the Lomb-style power spectrum of the mean-subtracted series on a
/// 4× oversampled grid up to the mean-spacing Nyquist frequency. Returns
/// `(frequency, peak power / median power)`.
fn spectral_peak(t: &[f64], y: &[f64]) -> (f64, f64) {
    let n = t.len();
    let span = t[n - 1] - t[0];
    let mean = y.iter().sum::<f64>() / n as f64;
    let df = 1.0 / (4.0 * span * MHZ_NS);
    let nyquist = 0.5 * (n - 1) as f64 / (span * MHZ_NS);
    let steps = (nyquist / df).floor() as usize;
    let power: Vec<(f64, f64)> = (1..=steps)
        .map(|k| {
            let f = k as f64 * df;
            let (mut c, mut s) = (0.0, 0.0);
            for (ti, yi) in t.iter().zip(y) {
                let w = 2.0 * PI * f * ti * MHZ_NS;
                c += (yi - mean) * w.cos();
                s += (yi - mean) * w.sin();
            }
            (f, c * c + s * s)
        })
        .collect();
    let Some(&(f0, p0)) = power.iter().max_by(|a, b| a.1.total_cmp(&b.1)) else {
        return (0.0, 0.0);
    };
    if !(p0 > 1e-24 * n as f64) {
        return (f0, 0.0);
    }
    let mut sorted: Vec<f64> = power.iter().map(|p| p.1).collect();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    (f0, if median > 0.0 { p0 / median } else { f64::INFINITY })
}

/// Linear least squares for `(a, b, B)` in `a cos + b sin + B` at fixed `f`, T.
fn linear_start(t: &[f64], y: &[f64], f: f64, tdec: f64, env: RamseyEnvelope) -> [f64; 5] {
    let m = DMatrix::from_fn(t.len(), 3, |i, j| {
        let w = 2.0 * PI * f * t[i] * MHZ_NS;
        let e = env.eval(t[i] / tdec);
        match j {
            0 => w.cos() * e,
            1 => w.sin() * e,
            _ => 1.0,
        }
    });
    let sol = m
        .svd(true, true)
        .solve(&DVector::from_column_slice(y), 1e-12)
        .unwrap_or_else(|_| DVector::from_vec(vec![0.0, 0.0, 0.0]));
    // a cos w + b sin w = A cos(w + φ) with A cos φ = a, −A sin φ = b.
    let amp = sol[0].hypot(sol[1]);
    let phi = (-sol[1]).atan2(sol[0]);
    [amp, f, phi, tdec.ln(), sol[2]]
}

/// Frequency, dephasing time, amplitude and offset of a decaying sinusoid.
/// The frequency is seeded from the dominant spectral peak.
pub fn fit_ramsey(series: &RamseySeries, envelope: RamseyEnvelope) -> Result<RamseyFit> {
    let (t, y) = (&series.times_ns, &series.probabilities);
    if t.len() < 8 {
        return Err(Error::invalid(format!("Ramsey fit needs at least 8 points, got {}", t.len())));
    }
    let (f0, prominence) = spectral_peak(t, y);
    if !(prominence > 8.0) {
        return Err(Error::FitFailure(format!(
            "no spectral peak above the noise floor (peak/median power {prominence:.2})"
        )));
    }
    let span = t[t.len() - 1] - t[0];
    if span * f0 * MHZ_NS < 1.0 {
        return Err(Error::FitFailure(format!(
            "series spans {:.2} periods of the {f0:.3} MHz peak; at least one is needed",
            span * f0 * MHZ_NS
        )));
    }

    let residual = |p: &DVector<f64>| DVector::from_iterator(t.len(), t.iter().zip(y).map(|(ti, yi)| model(p.as_slice(), envelope, *ti) - yi));
    let mut best: Option<crate::optim::LmFit> = None;
    for frac in [0.25, 0.5, 1.0, 3.0] {
        let p0 = linear_start(t, y, f0, frac * span, envelope);
        let Ok(fit) = levenberg_marquardt(residual, &p0, LmOptions::default()) else {
            continue;
        };
        if best.as_ref().is_none_or(|b| fit.sum_of_squares() < b.sum_of_squares()) {
            best = Some(fit);
        }
    }
    let fit = best.ok_or_else(|| Error::FitFailure("decaying-sinusoid fit did not converge".into()))?;
    let mut p = fit.params.clone();
    // Canonical form: A > 0, f > 0, φ ∈ (−π, π].
    if p[1] < 0.0 {
        p[1] = -p[1];
        p[2] = -p[2];
    }
    if p[0] < 0.0 {
        p[0] = -p[0];
        p[2] += PI;
    }
    p[2] = (p[2].sin()).atan2(p[2].cos());
    Ok(RamseyFit {
        frequency_mhz: p[1],
        t2_star_ns: p[3].exp(),
        amplitude: p[0],
        phase: p[2],
        offset: p[4],
        envelope,
        rms_residual: (fit.sum_of_squares() / t.len() as f64).sqrt(),
    })
}

/// Synthetic Ramsey trace `offset + amplitude·cos(2π f t)·env(t/T2*)` with
/// additive Gaussian noise of standard deviation `noise`, clipped to [0, 1].
#[allow(clippy::too_many_arguments)]
pub fn simulate_ramsey(
    frequency_mhz: f64,
    t2_star_ns: f64,
    amplitude: f64,
    offset: f64,
    times_ns: &[f64],
    noise: f64,
    envelope: RamseyEnvelope,
    seed: u64,
) -> Result<RamseySeries> {
    if !(noise >= 0.0) {
        return Err(Error::invalid("noise must be ≥ 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let p = [amplitude, frequency_mhz, 0.0, t2_star_ns.ln(), offset];
    let probs = times_ns
        .iter()
        .map(|&t| (model(&p, envelope, t) + noise * normal.sample(&mut rng)).clamp(0.0, 1.0))
        .collect();
    RamseySeries::new(times_ns.to_vec(), probs, 0.0)
}
