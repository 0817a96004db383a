use serde::{Deserialize, Serialize};

use super::exchange::{exchange_from_voltage, voltage_from_exchange, ExchangeModel};
use super::sequence::PulseSequence;
use super::waveform::{rasterize, Waveform, WaveformKind};
use crate::error::{Error, Result};

/// Lowest exchange (MHz) a distorted waveform is allowed to reach.
pub const DEFAULT_EXCHANGE_FLOOR: f64 = 1e-4;

/// Kernels are truncated once `exp(−t/τ)` drops below this.
const KERNEL_TAIL: f64 = 1e-18;

/// `V ∘ K_lp ∘ (1 + K_hp)` with `K_lp = e^{−t/τ_lp}/τ_lp` and
/// `K_hp = A_hp(δ(t) − e^{−t/τ_hp}/τ_hp)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub tau_lp: f64,
    pub a_hp: f64,
    pub tau_hp: f64,
}

impl FilterSpec {
    pub fn new(tau_lp: f64, a_hp: f64, tau_hp: f64) -> Result<Self> {
        let f = Self { tau_lp, a_hp, tau_hp };
        f.validate()?;
        Ok(f)
    }

    /// τ_lp = 1 ns, A_hp = 0.05, τ_hp = 40 ns.
    pub fn paper() -> Self {
        Self { tau_lp: 1.0, a_hp: 0.05, tau_hp: 40.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_lp > 0.0) || !self.tau_lp.is_finite() {
            return Err(Error::invalid(format!("tau_lp must be > 0, got {}", self.tau_lp)));
        }
        if !(self.tau_hp > 0.0) || !self.tau_hp.is_finite() {
            return Err(Error::invalid(format!("tau_hp must be > 0, got {}", self.tau_hp)));
        }
        if !(0.0..1.0).contains(&self.a_hp) {
            return Err(Error::invalid(format!("A_hp must lie in [0, 1), got {}", self.a_hp)));
        }
        Ok(())
    }

    /// Discrete low-pass weights `K_lp[m]·dt`, summing to 1.
    pub fn lowpass_kernel(&self, dt: f64) -> Vec<f64> {
        decay_weights(self.tau_lp, dt, 1.0)
    }

    /// Discrete partial high-pass weights `K_hp[m]·dt`: `A_hp` at `m = 0` minus
    /// an exponential tail carrying `A_hp` in total, so the sum is 0.
    pub fn highpass_kernel(&self, dt: f64) -> Vec<f64> {
        let mut k: Vec<f64> = decay_weights(self.tau_hp, dt, self.a_hp).into_iter().map(|w| -w).collect();
        k[0] += self.a_hp;
        k
    }
}

fn decay_weights(tau: f64, dt: f64, total: f64) -> Vec<f64> {
    let len = ((-KERNEL_TAIL.ln()) * tau / dt).ceil().max(1.0) as usize;
    let raw: Vec<f64> = (0..len).map(|m| (-(m as f64) * dt / tau).exp()).collect();
    let norm: f64 = raw.iter().sum();
    raw.into_iter().map(|w| total * w / norm).collect()
}

/// Causal convolution; samples before t = 0 repeat the first sample.
fn convolve_padded(x: &[f64], kernel: &[f64]) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    // tail[m] = Σ_{i ≥ m} kernel[i]
    let mut tail = vec![0.0; kernel.len() + 1];
    for m in (0..kernel.len()).rev() {
        tail[m] = tail[m + 1] + kernel[m];
    }
    (0..x.len())
        .map(|n| {
            let reach = kernel.len().min(n + 1);
            let mut acc = 0.0;
            for m in 0..reach {
                acc += kernel[m] * x[n - m];
            }
            acc + x[0] * tail[reach]
        })
        .collect()
}

pub fn apply_distortion(w: &Waveform, f: &FilterSpec) -> Result<Waveform> {
    if w.kind() != WaveformKind::Voltage {
        return Err(Error::invalid("distortion acts on voltage waveforms"));
    }
    f.validate()?;
    let lp = convolve_padded(w.samples(), &f.lowpass_kernel(w.dt()));
    if f.a_hp == 0.0 {
        return Ok(w.with_samples(lp));
    }
    let hp = convolve_padded(&lp, &f.highpass_kernel(w.dt()));
    Ok(w.with_samples(lp.iter().zip(&hp).map(|(a, b)| a + b).collect()))
}

/// Only the low-pass stage of the pipeline.
pub fn apply_lowpass(w: &Waveform, tau_lp: f64) -> Result<Waveform> {
    let f = FilterSpec::new(tau_lp, 0.0, 1.0)?;
    apply_distortion(w, &f)
}

pub fn exchange_to_voltage(w: &Waveform, model: &ExchangeModel) -> Result<Waveform> {
    if w.kind() != WaveformKind::Exchange {
        return Err(Error::invalid("expected an exchange waveform"));
    }
    let v: Result<Vec<f64>> = w.samples().iter().map(|&j| voltage_from_exchange(j, model)).collect();
    Waveform::new(w.dt(), WaveformKind::Voltage, v?)
}

pub fn voltage_to_exchange(w: &Waveform, model: &ExchangeModel, floor: f64) -> Result<Waveform> {
    if w.kind() != WaveformKind::Voltage {
        return Err(Error::invalid("expected a voltage waveform"));
    }
    Ok(w.map(WaveformKind::Exchange, |v| exchange_from_voltage(v, model).max(floor)))
}

/// Rasterize → voltage → filter → exchange, clamped at [`DEFAULT_EXCHANGE_FLOOR`].
pub fn distort_exchange(
    seq: &PulseSequence,
    model: &ExchangeModel,
    f: &FilterSpec,
    dt: f64,
    round_segments: bool,
) -> Result<Waveform> {
    distort_exchange_with_floor(seq, model, f, dt, round_segments, DEFAULT_EXCHANGE_FLOOR)
}

pub fn distort_exchange_with_floor(
    seq: &PulseSequence,
    model: &ExchangeModel,
    f: &FilterSpec,
    dt: f64,
    round_segments: bool,
    floor: f64,
) -> Result<Waveform> {
    model.validate()?;
    let j = rasterize(seq, dt, round_segments)?;
    let v = exchange_to_voltage(&j, model)?;
    voltage_to_exchange(&apply_distortion(&v, f)?, model, floor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn volt(samples: Vec<f64>) -> Waveform {
        Waveform::new(1.0, WaveformKind::Voltage, samples).unwrap()
    }

    #[test]
    fn kernel_normalization() {
        let f = FilterSpec::paper();
        let lp: f64 = f.lowpass_kernel(1.0).iter().sum();
        let hp: f64 = f.highpass_kernel(1.0).iter().sum();
        assert!((lp - 1.0).abs() < 1e-15);
        assert!(hp.abs() < 1e-15);
    }

    #[test]
    fn constant_passes_through() {
        let w = volt(vec![3.7; 200]);
        let out = apply_distortion(&w, &FilterSpec::paper()).unwrap();
        for s in out.samples() {
            assert!((s - 3.7).abs() < 1e-12);
        }
    }

    #[test]
    fn lowpass_step_response() {
        let mut x = vec![0.0; 20];
        x.extend(vec![1.0; 50]);
        let out = apply_lowpass(&volt(x), 1.0).unwrap();
        for n in 0..50 {
            // sample n covers [n, n+1); its response is the value at its end
            let expect = 1.0 - (-((n + 1) as f64)).exp();
            assert!((out.samples()[20 + n] - expect).abs() < 1e-12);
        }
        assert!(out.samples()[..20].iter().all(|s| s.abs() < 1e-15));
    }

    #[test]
    fn full_pipeline_step_matches_geometric_sums() {
        let f = FilterSpec::paper();
        let mut x = vec![0.0; 10];
        x.extend(vec![1.0; 400]);
        let out = apply_distortion(&volt(x), &f).unwrap();
        let a = (-1.0f64 / f.tau_lp).exp();
        let b = (-1.0f64 / f.tau_hp).exp();
        for n in 0..400 {
            let k = (n + 1) as i32;
            let lp = 1.0 - a.powi(k);
            // Σ_{m=0}^{n} (1−b) b^m (1 − a^{n−m+1})
            let ema = (1.0 - b.powi(k)) - (1.0 - b) * a * (a.powi(k) - b.powi(k)) / (a - b);
            let expect = lp + f.a_hp * (lp - ema);
            assert!((out.samples()[10 + n] - expect).abs() < 1e-9, "n = {n}");
        }
        let peak = out.samples().iter().copied().fold(0.0, f64::max);
        assert!(peak > 1.03 && peak < 1.05);
        assert!((out.samples()[409] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn rejects_exchange_input() {
        let w = Waveform::new(1.0, WaveformKind::Exchange, vec![1.0]).unwrap();
        assert!(apply_distortion(&w, &FilterSpec::paper()).is_err());
    }

    #[test]
    fn invalid_filters() {
        assert!(FilterSpec::new(0.0, 0.05, 40.0).is_err());
        assert!(FilterSpec::new(1.0, 1.0, 40.0).is_err());
        assert!(FilterSpec::new(1.0, 0.05, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn linear_in_voltage(
            v1 in proptest::collection::vec(-5.0..5.0f64, 64),
            v2 in proptest::collection::vec(-5.0..5.0f64, 64),
            a in -3.0..3.0f64,
            b in -3.0..3.0f64,
        ) {
            let f = FilterSpec::paper();
            let mix: Vec<f64> = v1.iter().zip(&v2).map(|(x, y)| a * x + b * y).collect();
            let lhs = apply_distortion(&volt(mix), &f).unwrap();
            let o1 = apply_distortion(&volt(v1), &f).unwrap();
            let o2 = apply_distortion(&volt(v2), &f).unwrap();
            for i in 0..64 {
                let rhs = a * o1.samples()[i] + b * o2.samples()[i];
                prop_assert!((lhs.samples()[i] - rhs).abs() < 1e-10);
            }
        }

        #[test]
        fn dc_preserved(c in -100.0..100.0f64, n in 1usize..300) {
            let out = apply_distortion(&volt(vec![c; n]), &FilterSpec::paper()).unwrap();
            for s in out.samples() {
                prop_assert!((s - c).abs() < 1e-9);
            }
        }
    }
}
