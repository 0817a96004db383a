use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::{run_program, Execution, Program};
use super::noise::NoiseSpec;
use crate::error::{Error, Result};
use crate::fmt::csv_row;
use crate::pulse::{scale_pulse, FilterSpec, PulseSequence};
use crate::qcore::Unitary2;
use crate::scqc::TargetGate;

/// β scales the J1/J2 levels of a corrected pulse; ξ scales the exchange and
/// duration of a square uncorrected pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Beta,
    Xi,
}

impl SweepKind {
    pub fn names(self) -> (&'static str, &'static str) {
        match self {
            SweepKind::Beta => ("beta1", "beta2"),
            SweepKind::Xi => ("xi1", "xi2"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl SweepAxis {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        let a = Self { min, max, steps };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 || !(self.min < self.max) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::invalid(format!(
                "sweep axis needs min < max and ≥ 2 steps, got [{}, {}] × {}",
                self.min, self.max, self.steps
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.min + h * i as f64).collect()
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.steps - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub first: SweepAxis,
    pub second: SweepAxis,
}

impl SweepSpec {
    /// β1, β2 ∈ [0.85, 1.15], 31 × 31.
    pub fn default_beta() -> Self {
        let a = SweepAxis { min: 0.85, max: 1.15, steps: 31 };
        Self { kind: SweepKind::Beta, first: a, second: a }
    }

    /// ξ1, ξ2 ∈ [0.8, 1.2], 31 × 31.
    pub fn default_xi() -> Self {
        let a = SweepAxis { min: 0.8, max: 1.2, steps: 31 };
        Self { kind: SweepKind::Xi, first: a, second: a }
    }

    pub fn validate(&self) -> Result<()> {
        self.first.validate()?;
        self.second.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub first: f64,
    pub second: f64,
    pub fidelity: f64,
    pub stderr: f64,
}

/// `fidelity[i][j]` belongs to `(first[i], second[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityGrid {
    pub gate: String,
    pub kind: SweepKind,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub fidelity: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    pub noise: NoiseSpec,
    pub filter: Option<FilterSpec>,
}

impl FidelityGrid {
    pub fn optimum(&self) -> GridPoint {
        let mut best = GridPoint { first: f64::NAN, second: f64::NAN, fidelity: f64::NEG_INFINITY, stderr: 0.0 };
        for (i, row) in self.fidelity.iter().enumerate() {
            for (j, &f) in row.iter().enumerate() {
                if f > best.fidelity {
                    best = GridPoint { first: self.first[i], second: self.second[j], fidelity: f, stderr: self.stderr[i][j] };
                }
            }
        }
        best
    }

    pub fn at(&self, i: usize, j: usize) -> GridPoint {
        GridPoint { first: self.first[i], second: self.second[j], fidelity: self.fidelity[i][j], stderr: self.stderr[i][j] }
    }

    /// For every `second` value, the `first` value with the highest fidelity.
    pub fn ridge(&self) -> Vec<(f64, f64)> {
        (0..self.second.len())
            .map(|j| {
                let i = (0..self.first.len())
                    .max_by(|&a, &b| self.fidelity[a][j].total_cmp(&self.fidelity[b][j]))
                    .unwrap_or(0);
                (self.second[j], self.first[i])
            })
            .collect()
    }

    /// Like [`Self::ridge`] but with the peak located between grid points by
    /// a parabola through the best cell and its two neighbours along `first`.
    pub fn ridge_interpolated(&self) -> Vec<(f64, f64)> {
        let n = self.first.len();
        self.ridge()
            .into_iter()
            .enumerate()
            .map(|(j, (y, x))| {
                let i = self.first.iter().position(|v| *v == x).unwrap_or(0);
                if n < 3 || i == 0 || i == n - 1 {
                    return (y, x);
                }
                let (a, b, c) = (self.fidelity[i - 1][j], self.fidelity[i][j], self.fidelity[i + 1][j]);
                let den = a - 2.0 * b + c;
                let h = self.first[i + 1] - self.first[i];
                (y, if den < 0.0 { x + 0.5 * h * (a - c) / den } else { x })
            })
            .collect()
    }

    /// Long format: one `(first, second, fidelity, stderr)` row per cell.
    pub fn to_csv(&self) -> String {
        let (a, b) = self.kind.names();
        let mut out = format!("{a},{b},fidelity,stderr\n");
        for (i, x) in self.first.iter().enumerate() {
            for (j, y) in self.second.iter().enumerate() {
                let _ = writeln!(out, "{}", csv_row(&[*x, *y, self.fidelity[i][j], self.stderr[i][j]]));
            }
        }
        out
    }
}

fn sweep_with(
    gate: &str,
    sweep: &SweepSpec,
    build: impl Fn(f64, f64) -> Result<PulseSequence> + Sync,
    target: &Unitary2,
    exec: &Execution,
    noise: &NoiseSpec,
) -> Result<FidelityGrid> {
    sweep.validate()?;
    noise.validate()?;
    let (first, second) = (sweep.first.values(), sweep.second.values());
    let cells: Vec<(usize, usize)> = (0..first.len()).flat_map(|i| (0..second.len()).map(move |j| (i, j))).collect();
    // Every cell reuses the same noise draws.
    let results: Vec<Result<(f64, f64)>> = cells
        .par_iter()
        .map(|&(i, j)| {
            let seq = build(first[i], second[j])?;
            let out = run_program(&Program::compile(&seq, exec)?, seq.dez(), noise, target)?;
            Ok((out.fidelity, out.stderr))
        })
        .collect();
    let mut fidelity = vec![vec![0.0; second.len()]; first.len()];
    let mut stderr = fidelity.clone();
    for (&(i, j), r) in cells.iter().zip(results) {
        let (f, s) = r?;
        fidelity[i][j] = f;
        stderr[i][j] = s;
    }
    Ok(FidelityGrid {
        gate: gate.to_string(),
        kind: sweep.kind,
        first,
        second,
        fidelity,
        stderr,
        noise: *noise,
        filter: exec.filter(),
    })
}

/// β1 × β2 landscape of a corrected pulse.
pub fn sweep_corrected(
    seq: &PulseSequence,
    target: &Unitary2,
    sweep: &SweepSpec,
    exec: &Execution,
    noise: &NoiseSpec,
) -> Result<FidelityGrid> {
    if sweep.kind != SweepKind::Beta {
        return Err(Error::invalid("corrected sweeps run over (beta1, beta2)"));
    }
    sweep_with(seq.label(), sweep, |b1, b2| scale_pulse(seq, b1, b2), target, exec, noise)
}

/// ξ1 × ξ2 landscape of the square-pulse Hadamard or 2π identity.
pub fn sweep_uncorrected(
    gate: TargetGate,
    dez: f64,
    sweep: &SweepSpec,
    exec: &Execution,
    noise: &NoiseSpec,
) -> Result<FidelityGrid> {
    if sweep.kind != SweepKind::Xi {
        return Err(Error::invalid("uncorrected sweeps run over (xi1, xi2)"));
    }
    let (label, build): (&str, fn(f64, f64, f64) -> Result<PulseSequence>) = match gate {
        TargetGate::Hadamard => ("H", PulseSequence::uncorrected_hadamard),
        TargetGate::Identity => ("I", PulseSequence::uncorrected_identity),
    };
    sweep_with(label, sweep, |a, b| build(dez, a, b), &gate.unitary(), exec, noise)
}
