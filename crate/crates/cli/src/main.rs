//! `dcg`: design, simulate and analyse dynamically corrected gates for a
//! singlet-triplet qubit.

mod artifact;
mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CutAxis, EnvelopeArg};
use config::{Gate, RunConfig};
use error::CliError;

#[derive(Parser)]
#[command(name = "dcg", version, about = "Dynamically corrected gates for singlet-triplet qubits")]
struct Cli {
    /// TOML run configuration; overrides --profile.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in configuration profile.
    #[arg(long, global = true, default_value = "paper")]
    profile: String,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads, 0 for every core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit Ramsey traces and the exchange model on synthetic calibration data.
    Calibrate {
        #[arg(long, value_enum)]
        model: Option<EnvelopeArg>,
    },
    /// Design a DCG and export its pulse and error curve.
    Design {
        #[arg(long, value_enum)]
        gate: Option<Gate>,
    },
    /// Fidelity landscape over the configured knob grid.
    Sweep {
        #[arg(long, value_enum)]
        gate: Option<Gate>,
    },
    /// Fidelities of all gates under every noise configuration.
    Table1,
    /// Residual-based uncertainty of a line cut through a sweep grid.
    Errorbars {
        /// `grid_<gate>.json` written by `sweep`.
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, value_enum, default_value = "first")]
        along: CutAxis,
    },
    /// Compare the kernel and circuit distortion models on a DCG.
    Distort {
        #[arg(long, value_enum)]
        gate: Option<Gate>,
    },
    /// Monte Carlo fidelity spread across reseeded runs.
    Scatter {
        #[arg(long, value_enum)]
        gate: Option<Gate>,
        #[arg(long)]
        repeats: Option<usize>,
    },
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::profile(&cli.profile)?,
    };
    if let Some(s) = cli.seed {
        cfg.run.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.run.workers = w;
    }
    if let Some(o) = &cli.out {
        cfg.run.out = o.clone();
    }
    if let Command::Scatter { repeats: Some(r), .. } = cli.command {
        cfg.scatter.repeats = r;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let cfg = resolve(&cli)?;
    if cfg.run.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.run.workers)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {} workers: {e}", cfg.run.workers)))?;
    }
    let out = cfg.run.out.clone();
    let gate = |g: Option<Gate>| g.unwrap_or(cfg.run.gate);
    match cli.command {
        Command::Calibrate { model } => commands::calibrate(&cfg, &out, model),
        Command::Design { gate: g } => commands::design(&cfg, &out, gate(g)),
        Command::Sweep { gate: g } => commands::sweep(&cfg, &out, gate(g)),
        Command::Table1 => commands::table(&cfg, &out),
        Command::Errorbars { grid, along } => commands::errorbars(&cfg, &out, &grid, along),
        Command::Distort { gate: g } => commands::distort(&cfg, &out, gate(g)),
        Command::Scatter { gate: g, .. } => commands::scatter(&cfg, &out, gate(g)),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dcg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
