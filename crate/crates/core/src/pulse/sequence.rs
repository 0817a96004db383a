use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{evolve_unchecked, Unitary2, MHZ_NS};

/// Which calibration knob a segment belongs to. `scale_pulse` multiplies
/// `J1` segments by β1 and `J2` segments by β2; everything else is untouched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentRole {
    Hadamard,
    J1,
    J2,
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// Exchange in MHz.
    pub exchange: f64,
    /// Duration in ns.
    pub duration: f64,
    pub role: SegmentRole,
}

impl Segment {
    pub fn new(exchange: f64, duration: f64, role: SegmentRole) -> Self {
        Self { exchange, duration, role }
    }
}

/// Piecewise-constant exchange pulse, executed first segment first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    label: String,
    dez: f64,
    segments: Vec<Segment>,
}

impl PulseSequence {
    pub fn new(label: impl Into<String>, dez: f64, segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::invalid("pulse sequence has no segments"));
        }
        for (i, s) in segments.iter().enumerate() {
            if !(s.exchange > 0.0) || !s.exchange.is_finite() {
                return Err(Error::invalid(format!("segment {i}: exchange must be > 0, got {}", s.exchange)));
            }
            if !(s.duration > 0.0) || !s.duration.is_finite() {
                return Err(Error::invalid(format!("segment {i}: duration must be > 0, got {}", s.duration)));
            }
        }
        if !dez.is_finite() {
            return Err(Error::invalid("Zeeman gradient must be finite"));
        }
        Ok(Self { label: label.into(), dez, segments })
    }

    /// Square pulse of exchange `j` for `duration` ns.
    pub fn square(label: impl Into<String>, dez: f64, j: f64, duration: f64) -> Result<Self> {
        Self::new(label, dez, vec![Segment::new(j, duration, SegmentRole::Plain)])
    }

    /// Uncorrected Hadamard: `J = ξ1·ΔE_Z` for `ξ2/(2√2 ΔE_Z)`.
    pub fn uncorrected_hadamard(dez: f64, xi1: f64, xi2: f64) -> Result<Self> {
        Self::new(
            "H",
            dez,
            vec![Segment::new(xi1 * dez, xi2 * hadamard_time(dez), SegmentRole::Hadamard)],
        )
    }

    /// Uncorrected identity: a 2π rotation at `J = ξ1·ΔE_Z` lasting `ξ2/(√2 ΔE_Z)`.
    pub fn uncorrected_identity(dez: f64, xi1: f64, xi2: f64) -> Result<Self> {
        Self::new(
            "I",
            dez,
            vec![Segment::new(xi1 * dez, xi2 * 2.0 * hadamard_time(dez), SegmentRole::Plain)],
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dez(&self) -> f64 {
        self.dez
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn max_exchange(&self) -> f64 {
        self.segments.iter().map(|s| s.exchange).fold(0.0, f64::max)
    }

    /// Exact noiseless propagator, one closed-form step per segment.
    pub fn unitary(&self) -> Unitary2 {
        self.unitary_with(1.0, 0.0)
    }

    /// Propagator with every exchange multiplied by `exchange_factor` and the
    /// Zeeman gradient shifted by `dez_shift`.
    pub fn unitary_with(&self, exchange_factor: f64, dez_shift: f64) -> Unitary2 {
        let dez = self.dez + dez_shift;
        self.segments.iter().fold(Unitary2::identity(), |acc, s| {
            evolve_unchecked(s.exchange * exchange_factor, dez, s.duration) * acc
        })
    }
}

/// `1/(2√2 ΔE_Z)` in ns: the square-pulse Hadamard duration at `J = ΔE_Z`.
pub fn hadamard_time(dez: f64) -> f64 {
    1.0 / (2.0 * SQRT_2 * dez * MHZ_NS)
}

/// Multiplies `J1` segments by `beta1` and `J2` segments by `beta2`.
pub fn scale_pulse(seq: &PulseSequence, beta1: f64, beta2: f64) -> Result<PulseSequence> {
    if !(beta1 > 0.0) || !(beta2 > 0.0) {
        return Err(Error::invalid(format!("scale factors must be > 0, got ({beta1}, {beta2})")));
    }
    let segments = seq
        .segments
        .iter()
        .map(|s| {
            let factor = match s.role {
                SegmentRole::J1 => beta1,
                SegmentRole::J2 => beta2,
                SegmentRole::Hadamard | SegmentRole::Plain => 1.0,
            };
            Segment { exchange: s.exchange * factor, ..*s }
        })
        .collect();
    Ok(PulseSequence { label: seq.label.clone(), dez: seq.dez, segments })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_dcg() -> PulseSequence {
        let mut segs = Vec::new();
        for _ in 0..3 {
            segs.push(Segment::new(0.4, 121.0, SegmentRole::J2));
            segs.push(Segment::new(9.7, 60.0, SegmentRole::J1));
        }
        PulseSequence::new("DCG I", 2.9, segs).unwrap()
    }

    #[test]
    fn rejects_non_positive_exchange() {
        let bad = PulseSequence::new("x", 2.9, vec![Segment::new(0.0, 10.0, SegmentRole::Plain)]);
        assert!(bad.is_err());
        assert!(PulseSequence::new("x", 2.9, vec![]).is_err());
        assert!(PulseSequence::new("x", 2.9, vec![Segment::new(1.0, -1.0, SegmentRole::Plain)]).is_err());
    }

    #[test]
    fn unit_scaling_is_identity() {
        let p = identity_dcg();
        assert_eq!(scale_pulse(&p, 1.0, 1.0).unwrap(), p);
    }

    #[test]
    fn scaling_touches_only_labelled_segments() {
        let p = scale_pulse(&identity_dcg(), 1.1, 1.0).unwrap();
        for s in p.segments() {
            match s.role {
                SegmentRole::J1 => assert!((s.exchange - 10.67).abs() < 1e-12),
                SegmentRole::J2 => assert_eq!(s.exchange, 0.4),
                _ => unreachable!(),
            }
        }
        let h = PulseSequence::new(
            "DCG H",
            2.5,
            vec![
                Segment::new(2.5, hadamard_time(2.5), SegmentRole::Hadamard),
                Segment::new(22.0, 10.3, SegmentRole::J1),
                Segment::new(0.1, 109.0, SegmentRole::J2),
            ],
        )
        .unwrap();
        let s = scale_pulse(&h, 0.9, 1.2).unwrap();
        let ex: Vec<f64> = s.segments().iter().map(|s| s.exchange).collect();
        assert!((ex[0] - 2.5).abs() < 1e-15);
        assert!((ex[1] - 19.8).abs() < 1e-12);
        assert!((ex[2] - 0.12).abs() < 1e-12);
        assert!(scale_pulse(&h, 0.0, 1.0).is_err());
    }

    #[test]
    fn hadamard_time_value() {
        assert!((hadamard_time(2.5) - 141.421356).abs() < 1e-5);
    }
}
