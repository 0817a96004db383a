use std::path::{Path, PathBuf};

use dcg_core::analysis::RamseyEnvelope;
use dcg_core::pulse::{CircuitModel, ExchangeModel, FilterSpec};
use dcg_core::sim::{CalibrationBox, NoiseConfig, NoiseSpec, SweepSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

const PAPER_PROFILE: &str = include_str!("../profiles/paper.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Gate {
    Hadamard,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub gate: Gate,
    pub seed: u64,
    /// 0 uses every core.
    pub workers: usize,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExchangeSection {
    pub j0: f64,
    pub v0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub sigma_hyperfine: f64,
    pub sigma_j_rel: f64,
    pub realizations_hadamard: usize,
    pub realizations_identity: usize,
    pub config: NoiseConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    pub dez_identity: f64,
    pub dez_hadamard: f64,
    pub jmax_hadamard: f64,
    pub relaxation: f64,
    /// Raster step of distorted waveforms, ns.
    pub dt: f64,
}

/// Synthetic calibration experiment: Ramsey traces at each voltage of a
/// planted exchange model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamseySection {
    pub j0: f64,
    pub v0: f64,
    pub dez: f64,
    pub voltages: Vec<f64>,
    pub time_step: f64,
    pub points: usize,
    pub t2_star: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub noise: f64,
    pub envelope: RamseyEnvelope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterSection {
    pub repeats: usize,
}

/// Fully resolved run configuration. Filter and circuit blocks are optional;
/// without a filter every gate runs undistorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub exchange: ExchangeSection,
    pub noise: NoiseSection,
    #[serde(default)]
    pub filter: Option<FilterSpec>,
    #[serde(default)]
    pub circuit: Option<CircuitModel>,
    pub design: DesignSection,
    pub sweep: SweepSpec,
    pub calibration_box: CalibrationBox,
    pub ramsey: RamseySection,
    pub scatter: ScatterSection,
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn profile(name: &str) -> Result<Self, CliError> {
        match name {
            "paper" => Self::parse(PAPER_PROFILE, "profile 'paper'"),
            other => Err(CliError::Config(format!("unknown profile '{other}' (available: paper)"))),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if let Some(f) = &self.filter {
            f.validate().map_err(|e| CliError::Config(format!("[filter] {e}")))?;
        }
        if let Some(c) = &self.circuit {
            c.validate().map_err(|e| CliError::Config(format!("[circuit] {e}")))?;
        }
        self.sweep.validate().map_err(|e| CliError::Config(format!("[sweep] {e}")))?;
        self.noise_spec(Gate::Hadamard)
            .validate()
            .map_err(|e| CliError::Config(format!("[noise] {e}")))?;
        self.noise_spec(Gate::Identity)
            .validate()
            .map_err(|e| CliError::Config(format!("[noise] {e}")))?;
        for (g, dez) in [(Gate::Hadamard, self.design.dez_hadamard), (Gate::Identity, self.design.dez_identity)] {
            self.exchange_model(g)
                .validate()
                .map_err(|e| CliError::Config(format!("[exchange] {e}")))?;
            if !(dez > 0.0) {
                return bad(format!("[design] dEz must be > 0, got {dez}"));
            }
        }
        if !(self.design.dt > 0.0) {
            return bad("[design] dt must be > 0".into());
        }
        let r = &self.ramsey;
        if r.voltages.len() < 4 || r.points < 8 || !(r.time_step > 0.0) {
            return bad("[ramsey] needs at least 4 voltages, 8 points and a positive time step".into());
        }
        if self.scatter.repeats < 20 {
            return bad(format!("[scatter] repeats must be at least 20, got {}", self.scatter.repeats));
        }
        Ok(())
    }

    pub fn dez(&self, gate: Gate) -> f64 {
        match gate {
            Gate::Hadamard => self.design.dez_hadamard,
            Gate::Identity => self.design.dez_identity,
        }
    }

    pub fn exchange_model(&self, gate: Gate) -> ExchangeModel {
        ExchangeModel { j0: self.exchange.j0, v0: self.exchange.v0, dez: self.dez(gate) }
    }

    pub fn realizations(&self, gate: Gate) -> usize {
        match gate {
            Gate::Hadamard => self.noise.realizations_hadamard,
            Gate::Identity => self.noise.realizations_identity,
        }
    }

    pub fn noise_spec(&self, gate: Gate) -> NoiseSpec {
        NoiseSpec {
            sigma_hyperfine: self.noise.sigma_hyperfine,
            sigma_j_rel: self.noise.sigma_j_rel,
            realizations: self.realizations(gate),
            seed: self.run.seed,
            hyperfine: true,
            charge: true,
        }
        .with_config(self.noise.config)
    }
}
