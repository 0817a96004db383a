//! Lumped model of a partially broken gate electrode.
//!
//! Topology: the driven gate section carries `V_in`. A detached fragment (node
//! A) couples to it across the break through `C2` and leaks to ground through
//! `R`. The dot potential (node B, floating) couples to the driven section
//! through `C1` and to the fragment through `C3`. The fragment follows only the
//! fast part of `V_in`, so node B sees the input plus a small decaying
//! overshoot of relative size `C3/C1` and time constant `≈ R·C2`.
//!
//! ```text
//!  V_in ──┬──── C2 ────┬── A ──── R ──── ⏚
//!         │            │
//!         C1           C3
//!         │            │
//!         └──── B ─────┘
//! ```

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::exchange::ExchangeModel;
use super::filter::{apply_distortion, apply_lowpass, exchange_to_voltage, voltage_to_exchange, FilterSpec, DEFAULT_EXCHANGE_FLOOR};
use super::sequence::PulseSequence;
use super::waveform::{rasterize, Waveform, WaveformKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitModel {
    /// GΩ.
    pub r: f64,
    /// aF.
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl CircuitModel {
    pub fn new(r: f64, c1: f64, c2: f64, c3: f64) -> Result<Self> {
        let c = Self { r, c1, c2, c3 };
        c.validate()?;
        Ok(c)
    }

    /// R = 10 GΩ, C1 = 1 aF, C2 = 4 aF, C3 = 0.05 aF.
    pub fn paper() -> Self {
        Self { r: 10.0, c1: 1.0, c2: 4.0, c3: 0.05 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("R", self.r), ("C1", self.c1), ("C2", self.c2), ("C3", self.c3)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("circuit component {name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// DC gain of node B; the output is divided by it.
    pub fn dc_gain(&self) -> f64 {
        self.c1 / (self.c1 + self.c3)
    }

    /// Relaxation constant in ns (1 GΩ·1 aF = 1 ns).
    pub fn time_constant(&self) -> f64 {
        self.r * (self.c2 + self.c1 * self.c3 / (self.c1 + self.c3))
    }

    /// Height of the rescaled step-response overshoot.
    /// Both nodes follow an input step fully at first, so this is `C3/C1`.
    pub fn overshoot(&self) -> f64 {
        self.c3 / self.c1
    }
}

/// Implicit-Euler solution of the nodal equations, starting from the steady
/// state of the first sample; output is `V_B` divided by the DC gain.
pub fn circuit_response(w: &Waveform, c: &CircuitModel, dt: f64) -> Result<Waveform> {
    c.validate()?;
    if w.kind() != WaveformKind::Voltage {
        return Err(Error::invalid("circuit input must be a voltage waveform"));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("time step must be > 0, got {dt}")));
    }
    let x = w.samples();
    if x.is_empty() {
        return Ok(w.clone());
    }
    // Capacitance matrix on (A, B), input coupling vector, conductance (1/(GΩ) → per ns with aF).
    let cm = Matrix2::new(c.c2 + c.c3, -c.c3, -c.c3, c.c1 + c.c3);
    let cin = Vector2::new(c.c2, c.c1);
    let g = Matrix2::new(1.0 / c.r, 0.0, 0.0, 0.0);
    let lhs = (cm + g * dt)
        .try_inverse()
        .ok_or_else(|| Error::invalid("singular circuit matrix"))?;
    // Steady state under a constant input: A discharged, B a capacitive divider.
    let mut v = Vector2::new(0.0, x[0] * c.dc_gain());
    let mut prev = x[0];
    let mut out = Vec::with_capacity(x.len());
    for &vin in x {
        let rhs = cm * v + cin * (vin - prev);
        v = lhs * rhs;
        prev = vin;
        out.push(v[1] / c.dc_gain());
    }
    Waveform::new(w.dt(), WaveformKind::Voltage, out)
}

/// A pulse passed through the convolution kernels and through the circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionComparison {
    pub ideal_voltage: Waveform,
    pub kernel_voltage: Waveform,
    pub circuit_voltage: Waveform,
    pub kernel_exchange: Waveform,
    pub circuit_exchange: Waveform,
    /// RMS voltage difference over the ideal peak-to-peak swing.
    pub relative_rms: f64,
}

/// Runs `seq` through both distortion models. The circuit has no wiring
/// low-pass of its own, so it receives the low-passed input.
pub fn compare_distortion_models(
    seq: &PulseSequence,
    model: &ExchangeModel,
    filter: &FilterSpec,
    circuit: &CircuitModel,
    dt: f64,
) -> Result<DistortionComparison> {
    let ideal_voltage = exchange_to_voltage(&rasterize(seq, dt, true)?, model)?;
    let kernel_voltage = apply_distortion(&ideal_voltage, filter)?;
    let circuit_voltage = circuit_response(&apply_lowpass(&ideal_voltage, filter.tau_lp)?, circuit, dt)?;
    let swing = ideal_voltage.amplitude();
    if !(swing > 0.0) {
        return Err(Error::invalid("pulse has no voltage swing to compare"));
    }
    let relative_rms = kernel_voltage.rms_difference(&circuit_voltage)? / swing;
    Ok(DistortionComparison {
        kernel_exchange: voltage_to_exchange(&kernel_voltage, model, DEFAULT_EXCHANGE_FLOOR)?,
        circuit_exchange: voltage_to_exchange(&circuit_voltage, model, DEFAULT_EXCHANGE_FLOOR)?,
        ideal_voltage,
        kernel_voltage,
        circuit_voltage,
        relative_rms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_in_zero_out() {
        let w = Waveform::new(1.0, WaveformKind::Voltage, vec![0.0; 50]).unwrap();
        let out = circuit_response(&w, &CircuitModel::paper(), 1.0).unwrap();
        assert!(out.samples().iter().all(|s| *s == 0.0));
    }

    #[test]
    fn step_response_matches_two_node_solution() {
        let c = CircuitModel::paper();
        let dt = 0.01;
        let mut x = vec![0.0; 10];
        x.extend(vec![1.0; 20000]);
        let w = Waveform::new(dt, WaveformKind::Voltage, x).unwrap();
        let out = circuit_response(&w, &c, dt).unwrap();
        let (a, tau) = (c.overshoot(), c.time_constant());
        assert!((tau - 40.476).abs() < 1e-3);
        assert!((a - 0.05).abs() < 1e-12);
        for n in (0..20000).step_by(500) {
            let t = (n + 1) as f64 * dt;
            let expect = 1.0 + a * (-t / tau).exp();
            assert!((out.samples()[10 + n] - expect).abs() < 2e-5, "t = {t}");
        }
    }

    #[test]
    fn kernel_and_circuit_agree_on_a_hadamard_dcg() {
        let seq = crate::scqc::HadamardDcgParams::paper().to_pulse().unwrap();
        let model = ExchangeModel { j0: 0.05, v0: 10.0, dez: 2.5 };
        let cmp = compare_distortion_models(&seq, &model, &FilterSpec::paper(), &CircuitModel::paper(), 1.0).unwrap();
        assert!(cmp.relative_rms < 0.02, "{}", cmp.relative_rms);
        // Without the low-pass stage the sharp edges dominate the mismatch.
        let raw = circuit_response(&cmp.ideal_voltage, &CircuitModel::paper(), 1.0).unwrap();
        let raw_rms = cmp.kernel_voltage.rms_difference(&raw).unwrap() / cmp.ideal_voltage.amplitude();
        assert!(raw_rms > cmp.relative_rms);
    }

    #[test]
    fn rejects_bad_components() {
        assert!(CircuitModel::new(10.0, 1.0, 0.0, 0.05).is_err());
        let w = Waveform::new(1.0, WaveformKind::Voltage, vec![1.0]).unwrap();
        let bad = CircuitModel { r: -1.0, ..CircuitModel::paper() };
        assert!(circuit_response(&w, &bad, 1.0).is_err());
    }
}
