use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::sequence::PulseSequence;
use crate::error::{Error, Result};
use crate::fmt::csv_row;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveformKind {
    /// Samples in MHz.
    Exchange,
    /// Samples in mV.
    Voltage,
}

/// Uniformly sampled signal; sample `k` holds the value over `[k·dt, (k+1)·dt)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    dt: f64,
    kind: WaveformKind,
    samples: Vec<f64>,
}

impl Waveform {
    pub fn new(dt: f64, kind: WaveformKind, samples: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("time step must be > 0, got {dt}")));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("waveform contains non-finite samples"));
        }
        Ok(Self { dt, kind, samples })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn kind(&self) -> WaveformKind {
        self.kind
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.samples.len() as f64
    }

    pub(crate) fn map(&self, kind: WaveformKind, f: impl Fn(f64) -> f64) -> Waveform {
        Waveform { dt: self.dt, kind, samples: self.samples.iter().map(|&s| f(s)).collect() }
    }

    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Waveform {
        Waveform { dt: self.dt, kind: self.kind, samples }
    }

    /// Peak-to-peak excursion.
    pub fn amplitude(&self) -> f64 {
        let lo = self.samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if self.samples.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }

    /// Root-mean-square difference to another waveform on the same grid.
    pub fn rms_difference(&self, other: &Waveform) -> Result<f64> {
        if self.len() != other.len() || (self.dt - other.dt).abs() > 1e-12 {
            return Err(Error::invalid("waveforms are on different grids"));
        }
        if self.is_empty() {
            return Ok(0.0);
        }
        let ss: f64 = self.samples.iter().zip(&other.samples).map(|(a, b)| (a - b).powi(2)).sum();
        Ok((ss / self.len() as f64).sqrt())
    }

    /// `t_ns,value` with the sample start time in the first column.
    pub fn to_csv(&self) -> String {
        let header = match self.kind {
            WaveformKind::Exchange => "t_ns,j_mhz",
            WaveformKind::Voltage => "t_ns,v_mv",
        };
        let mut out = String::from(header);
        out.push('\n');
        for (k, s) in self.samples.iter().enumerate() {
            let _ = writeln!(out, "{}", csv_row(&[k as f64 * self.dt, *s]));
        }
        out
    }
}

/// Samples a pulse onto a `dt` grid. Each sample takes the exchange active at
/// its midpoint. With `round_segments`, every duration is first rounded to the
/// nearest whole ns, ties away from zero; segments that round to zero vanish.
pub fn rasterize(seq: &PulseSequence, dt: f64, round_segments: bool) -> Result<Waveform> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("time step must be > 0, got {dt}")));
    }
    let mut edges = Vec::with_capacity(seq.segments().len());
    let mut t = 0.0;
    for s in seq.segments() {
        t += if round_segments { s.duration.round() } else { s.duration };
        edges.push((t, s.exchange));
    }
    let n = (t / dt - 1e-9).ceil().max(0.0) as usize;
    let mut samples = Vec::with_capacity(n);
    let mut seg = 0;
    for k in 0..n {
        let mid = (k as f64 + 0.5) * dt;
        while seg + 1 < edges.len() && mid >= edges[seg].0 {
            seg += 1;
        }
        samples.push(edges[seg].1);
    }
    Waveform::new(dt, WaveformKind::Exchange, samples)
}
