use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::noise::{draw, NoiseSpec};
use crate::error::{Error, Result};
use crate::pulse::{
    distort_exchange, rasterize, ExchangeModel, FilterSpec, PulseSequence, Waveform, WaveformKind,
};
use crate::qcore::{average_channels, evolve_unchecked, process_fidelity, project_cptp, QuantumChannel, Unitary2};

/// Wiring distortion applied to the rasterized exchange waveform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distortion {
    pub model: ExchangeModel,
    pub filter: FilterSpec,
}

/// How a pulse is turned into a propagator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Execution {
    /// Closed-form segment propagators at the exact durations.
    Exact,
    /// Stepping a `dt` grid, optionally after rounding segment durations to
    /// whole ns and passing the waveform through the wiring.
    Sampled { dt: f64, round_segments: bool, distortion: Option<Distortion> },
}

impl Execution {
    /// 1 ns stepping, rounded segments, distorted.
    pub fn hardware(model: ExchangeModel, filter: FilterSpec) -> Self {
        Execution::Sampled { dt: 1.0, round_segments: true, distortion: Some(Distortion { model, filter }) }
    }

    pub fn filter(&self) -> Option<FilterSpec> {
        match self {
            Execution::Sampled { distortion: Some(d), .. } => Some(d.filter),
            _ => None,
        }
    }
}

/// A pulse reduced to what the noise loop needs.
#[derive(Debug, Clone)]
pub(crate) enum Program {
    Segments(Vec<(f64, f64)>),
    Samples { dt: f64, exchange: Vec<f64> },
}

impl Program {
    pub(crate) fn compile(seq: &PulseSequence, exec: &Execution) -> Result<Self> {
        match *exec {
            Execution::Exact => Ok(Program::Segments(seq.segments().iter().map(|s| (s.exchange, s.duration)).collect())),
            Execution::Sampled { dt, round_segments, distortion } => {
                let w = match distortion {
                    Some(d) => distort_exchange(seq, &d.model, &d.filter, dt, round_segments)?,
                    None => rasterize(seq, dt, round_segments)?,
                };
                Ok(Program::Samples { dt, exchange: w.samples().to_vec() })
            }
        }
    }

    pub(crate) fn evolve(&self, factor: f64, dez: f64) -> Unitary2 {
        match self {
            Program::Segments(s) => s
                .iter()
                .fold(Unitary2::identity(), |acc, &(j, t)| evolve_unchecked(j * factor, dez, t) * acc),
            Program::Samples { dt, exchange } => exchange
                .iter()
                .fold(Unitary2::identity(), |acc, &j| evolve_unchecked(j * factor, dez, *dt) * acc),
        }
    }
}

/// Ordered product of per-sample propagators of an exchange waveform.
pub fn evolve_waveform(w: &Waveform, dez: f64) -> Result<Unitary2> {
    if w.kind() != WaveformKind::Exchange {
        return Err(Error::invalid("evolve_waveform needs an exchange waveform"));
    }
    Ok(Program::Samples { dt: w.dt(), exchange: w.samples().to_vec() }.evolve(1.0, dez))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McOutcome {
    /// Process fidelity of the averaged channel against the target.
    pub fidelity: f64,
    /// Standard error of `fidelity` over realizations.
    pub stderr: f64,
    pub realization_fidelities: Vec<f64>,
    #[serde(skip)]
    pub channel: Option<QuantumChannel>,
}

pub(crate) fn run_program(program: &Program, dez: f64, noise: &NoiseSpec, target: &Unitary2) -> Result<McOutcome> {
    noise.validate()?;
    let n = if noise.is_silent() { 1 } else { noise.realizations };
    // Realizations are computed in parallel but collected and reduced in index order.
    let unitaries: Vec<Unitary2> = (0..n)
        .into_par_iter()
        .map(|k| {
            let (shift, factor) = draw(noise, k);
            program.evolve(factor, dez + shift)
        })
        .collect();
    let realization_fidelities: Vec<f64> = unitaries.iter().map(|u| target.overlap_fidelity(u).min(1.0)).collect();
    let channels: Vec<QuantumChannel> = unitaries.iter().map(QuantumChannel::from_unitary).collect();
    let channel = project_cptp(&average_channels(&channels, &vec![1.0 / n as f64; n])?)?;
    let fidelity = process_fidelity(&channel, &QuantumChannel::from_unitary(target))?;
    let stderr = if n > 1 {
        let mean = realization_fidelities.iter().sum::<f64>() / n as f64;
        let var = realization_fidelities.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    Ok(McOutcome { fidelity, stderr, realization_fidelities, channel: Some(channel) })
}

/// Monte Carlo estimate of the gate's channel and its fidelity to `target`.
pub fn monte_carlo(seq: &PulseSequence, target: &Unitary2, exec: &Execution, noise: &NoiseSpec) -> Result<McOutcome> {
    run_program(&Program::compile(seq, exec)?, seq.dez(), noise, target)
}

/// Equal-weight average over realizations of the noisy unitary channels,
/// projected onto CPTP maps.
pub fn monte_carlo_channel(seq: &PulseSequence, exec: &Execution, noise: &NoiseSpec) -> Result<QuantumChannel> {
    let out = monte_carlo(seq, &Unitary2::identity(), exec, noise)?;
    Ok(out.channel.expect("channel is always produced"))
}

/// Noiseless propagator under `exec`.
pub fn ideal_unitary(seq: &PulseSequence, exec: &Execution) -> Result<Unitary2> {
    Ok(Program::compile(seq, exec)?.evolve(1.0, seq.dez()))
}
