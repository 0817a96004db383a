use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::{run_program, Distortion, Execution, Program};
use super::noise::{NoiseConfig, NoiseSpec};
use crate::error::{Error, Result};
use crate::fmt::sig12;
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::pulse::{scale_pulse, ExchangeModel, FilterSpec, PulseSequence};
use crate::qcore::Unitary2;
use crate::scqc::{
    design_hadamard, design_identity, HadamardDcgParams, HadamardDesignOptions, IdentityDcgParams,
    IdentityDesignOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateRow {
    H,
    DcgH,
    I,
    DcgI,
    UndistortedDcgH,
    UndistortedDcgI,
}

impl GateRow {
    pub const ALL: [GateRow; 6] =
        [GateRow::H, GateRow::DcgH, GateRow::I, GateRow::DcgI, GateRow::UndistortedDcgH, GateRow::UndistortedDcgI];

    pub fn label(self) -> &'static str {
        match self {
            GateRow::H => "H",
            GateRow::DcgH => "DCG H",
            GateRow::I => "I",
            GateRow::DcgI => "DCG I",
            GateRow::UndistortedDcgH => "Undistorted DCG H",
            GateRow::UndistortedDcgI => "Undistorted DCG I",
        }
    }

    pub fn is_hadamard(self) -> bool {
        matches!(self, GateRow::H | GateRow::DcgH | GateRow::UndistortedDcgH)
    }

    pub fn is_corrected(self) -> bool {
        !matches!(self, GateRow::H | GateRow::I)
    }

    pub fn is_distorted(self) -> bool {
        !matches!(self, GateRow::UndistortedDcgH | GateRow::UndistortedDcgI)
    }
}

/// Box searched when calibrating the two knobs of a gate (β for corrected
/// pulses, ξ for square pulses) against its own distortion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBox {
    pub beta: (f64, f64),
    pub xi: (f64, f64),
    pub grid: usize,
}

impl Default for CalibrationBox {
    fn default() -> Self {
        Self { beta: (0.7, 1.3), xi: (0.8, 1.2), grid: 31 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Config {
    pub hadamard: HadamardDcgParams,
    pub identity: IdentityDcgParams,
    pub model_hadamard: ExchangeModel,
    pub model_identity: ExchangeModel,
    pub filter: FilterSpec,
    pub sigma_hyperfine: f64,
    pub sigma_j_rel: f64,
    pub realizations_hadamard: usize,
    pub realizations_identity: usize,
    pub seed: u64,
    pub dt: f64,
    pub calibration: CalibrationBox,
}

impl Table1Config {
    /// Reference constants around the given gate designs.
    pub fn with_designs(hadamard: HadamardDcgParams, identity: IdentityDcgParams) -> Self {
        // J0 and V0 drop out of the distortion of an exponential J(V); any
        // valid pair gives the same distorted exchange.
        Self {
            model_hadamard: ExchangeModel { j0: 0.05, v0: 10.0, dez: hadamard.dez },
            model_identity: ExchangeModel { j0: 0.05, v0: 10.0, dez: identity.dez },
            hadamard,
            identity,
            filter: FilterSpec::paper(),
            sigma_hyperfine: NoiseSpec::PAPER_SIGMA_HYPERFINE,
            sigma_j_rel: NoiseSpec::PAPER_SIGMA_J_REL,
            realizations_hadamard: 128,
            realizations_identity: 256,
            seed: 20240601,
            dt: 1.0,
            calibration: CalibrationBox::default(),
        }
    }

    /// Designs both gates (ΔE_Z = 2.5 MHz with J ≤ 25 MHz for the Hadamard,
    /// ΔE_Z = 2.9 MHz for the identity) and wraps them in the reference constants.
    pub fn paper() -> Result<Self> {
        let h = design_hadamard(2.5, 25.0, 0.05, &HadamardDesignOptions::default())?;
        let i = design_identity(2.9, &IdentityDesignOptions::default())?;
        Ok(Self::with_designs(h.params, i.params))
    }

    fn noise(&self, row: GateRow) -> NoiseSpec {
        let n = if row.is_hadamard() { self.realizations_hadamard } else { self.realizations_identity };
        NoiseSpec {
            sigma_hyperfine: self.sigma_hyperfine,
            sigma_j_rel: self.sigma_j_rel,
            realizations: n,
            seed: self.seed,
            hyperfine: true,
            charge: true,
        }
    }

    pub fn execution(&self, row: GateRow) -> Execution {
        if !row.is_distorted() {
            return Execution::Exact;
        }
        let model = if row.is_hadamard() { self.model_hadamard } else { self.model_identity };
        Execution::Sampled {
            dt: self.dt,
            round_segments: true,
            distortion: Some(Distortion { model, filter: self.filter }),
        }
    }

    pub fn target(&self, row: GateRow) -> Unitary2 {
        if row.is_hadamard() {
            Unitary2::hadamard()
        } else {
            Unitary2::identity()
        }
    }

    /// The row's pulse at knob values `(k1, k2)`.
    pub fn pulse(&self, row: GateRow, k1: f64, k2: f64) -> Result<PulseSequence> {
        match row {
            GateRow::H => PulseSequence::uncorrected_hadamard(self.hadamard.dez, k1, k2),
            GateRow::I => PulseSequence::uncorrected_identity(self.identity.dez, k1, k2),
            GateRow::DcgH | GateRow::UndistortedDcgH => scale_pulse(&self.hadamard.to_pulse()?, k1, k2),
            GateRow::DcgI | GateRow::UndistortedDcgI => scale_pulse(&self.identity.to_pulse()?, k1, k2),
        }
    }

    fn knob_box(&self, row: GateRow) -> (f64, f64) {
        if row.is_corrected() {
            self.calibration.beta
        } else {
            self.calibration.xi
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.hadamard.validate()?;
        self.identity.validate()?;
        self.filter.validate()?;
        self.model_hadamard.validate()?;
        self.model_identity.validate()?;
        let c = &self.calibration;
        if !(c.beta.0 < c.beta.1 && c.xi.0 < c.xi.1 && c.beta.0 > 0.0 && c.xi.0 > 0.0) || c.grid < 2 {
            return Err(Error::invalid("calibration box needs positive, increasing bounds and ≥ 2 grid steps"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::invalid("time step must be > 0"));
        }
        self.noise(GateRow::H).validate()
    }

    /// Noiseless fidelity of a row at the given knobs.
    pub fn noiseless_fidelity(&self, row: GateRow, k1: f64, k2: f64) -> Result<f64> {
        let seq = self.pulse(row, k1, k2)?;
        let u = Program::compile(&seq, &self.execution(row))?.evolve(1.0, seq.dez());
        Ok(self.target(row).overlap_fidelity(&u))
    }

    /// Fidelity of a row under both noise sources at the given knobs.
    pub fn noisy_fidelity(&self, row: GateRow, k1: f64, k2: f64) -> Result<f64> {
        let seq = self.pulse(row, k1, k2)?;
        let program = Program::compile(&seq, &self.execution(row))?;
        Ok(run_program(&program, seq.dez(), &self.noise(row), &self.target(row))?.fidelity)
    }

    /// Knobs that maximize the fidelity under both noise sources, the way an
    /// experiment tunes against its own distortion: a grid search over the
    /// box, then a bounded simplex refinement. Every evaluation uses the same
    /// noise draws, so the landscape is smooth in the knobs.
    pub fn calibrate(&self, row: GateRow) -> Result<(f64, f64)> {
        let (lo, hi) = self.knob_box(row);
        let n = self.calibration.grid;
        let h = (hi - lo) / (n - 1) as f64;
        let cells: Vec<(f64, f64)> =
            (0..n).flat_map(|i| (0..n).map(move |j| (lo + h * i as f64, lo + h * j as f64))).collect();
        let scores: Vec<f64> =
            cells.par_iter().map(|&(a, b)| self.noisy_fidelity(row, a, b).unwrap_or(0.0)).collect();
        let (mut best, mut best_f) = ((1.0, 1.0), self.noisy_fidelity(row, 1.0, 1.0)?);
        for (c, f) in cells.into_iter().zip(scores) {
            if f > best_f + 1e-12 {
                best = c;
                best_f = f;
            }
        }
        let obj = |x: &[f64]| {
            if x.iter().any(|&v| v < lo || v > hi) {
                return 1.0;
            }
            1.0 - self.noisy_fidelity(row, x[0], x[1]).unwrap_or(0.0)
        };
        let opts = NelderMeadOptions { max_evaluations: 200, f_tol: 1e-12, x_tol: 1e-6 };
        let m = nelder_mead(obj, &[best.0, best.1], &[0.25 * h, 0.25 * h], opts);
        if 1.0 - m.value > best_f {
            best = (m.x[0], m.x[1]);
        }
        Ok(best)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub config: NoiseConfig,
    pub fidelity: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub gate: GateRow,
    /// Knobs used, (β1, β2) or (ξ1, ξ2).
    pub knobs: (f64, f64),
    /// Columns in [`NoiseConfig::ALL`] order, at the calibrated knobs.
    pub cells: Vec<TableCell>,
    /// Same columns at knobs (1, 1).
    pub nominal: Vec<TableCell>,
}

impl Table1Row {
    pub fn cell(&self, c: NoiseConfig) -> &TableCell {
        self.cells.iter().find(|x| x.config == c).expect("every column is present")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1 {
    pub rows: Vec<Table1Row>,
}

impl Table1 {
    pub fn row(&self, g: GateRow) -> Option<&Table1Row> {
        self.rows.iter().find(|r| r.gate == g)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("gate,knob1,knob2,dez_and_j,dez,j,no_noise,stderr_dez_and_j,stderr_dez,stderr_j\n");
        for r in &self.rows {
            let f: Vec<String> = r.cells.iter().map(|c| sig12(c.fidelity)).collect();
            let s: Vec<String> = r.cells.iter().take(3).map(|c| sig12(c.stderr)).collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.gate.label(),
                sig12(r.knobs.0),
                sig12(r.knobs.1),
                f.join(","),
                s.join(",")
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{:<18} {:>9} {:>9} {:>9} {:>9}   knobs\n", "Gate", "dEz & J", "dEz", "J", "No noise");
        for r in &self.rows {
            let _ = write!(out, "{:<18}", r.gate.label());
            for c in &r.cells {
                let _ = write!(out, " {:>9.4}", c.fidelity);
            }
            let _ = writeln!(out, "   ({:.3}, {:.3})", r.knobs.0, r.knobs.1);
        }
        out
    }
}

fn evaluate(cfg: &Table1Config, row: GateRow, k1: f64, k2: f64) -> Result<Vec<TableCell>> {
    let seq = cfg.pulse(row, k1, k2)?;
    let program = Program::compile(&seq, &cfg.execution(row))?;
    let target = cfg.target(row);
    NoiseConfig::ALL
        .iter()
        .map(|&c| {
            let out = run_program(&program, seq.dez(), &cfg.noise(row).with_config(c), &target)?;
            Ok(TableCell { config: c, fidelity: out.fidelity, stderr: out.stderr })
        })
        .collect()
}

/// Six gates × four noise configurations. Distorted rows are stepped at
/// `dt` with rounded segment times; the distorted corrected gates are first
/// recalibrated in (β1, β2). Uncorrected gates run at ξ = (1, 1) and the
/// undistorted gates use exact segment propagators at their design values.
/// All cells share the same noise draws.
pub fn table1(cfg: &Table1Config) -> Result<Table1> {
    cfg.validate()?;
    let rows = GateRow::ALL
        .iter()
        .map(|&g| {
            let knobs = if g.is_corrected() && g.is_distorted() { cfg.calibrate(g)? } else { (1.0, 1.0) };
            Ok(Table1Row { gate: g, knobs, cells: evaluate(cfg, g, knobs.0, knobs.1)?, nominal: evaluate(cfg, g, 1.0, 1.0)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table1 { rows })
}
