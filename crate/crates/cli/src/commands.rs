use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use dcg_core::analysis::{
    fidelity_scatter, fit_exchange_model, fit_ramsey, linecut_errorbar, qubit_frequency, simulate_ramsey, ExchangeFit,
    RamseyEnvelope, RamseyFit, ScatterStats, UncertaintyReport,
};
use dcg_core::fmt::{csv_row, sig12};
use dcg_core::pulse::{compare_distortion_models, PulseSequence};
use dcg_core::qcore::Unitary2;
use dcg_core::scqc::{
    build_identity_binormal, design_hadamard, design_identity, error_curve_from_pulse, ErrorCurve,
    HadamardDcgParams, HadamardDesignOptions, IdentityDcgParams, IdentityDesignOptions, IdentityShape, TargetGate,
    DEFAULT_SUBSTEP_NS,
};
use dcg_core::sim::{
    sweep_corrected, sweep_uncorrected, table1, Distortion, Execution, FidelityGrid, NoiseConfig, SweepKind,
    Table1Config,
};
use serde::Serialize;

use crate::artifact::ArtifactWriter;
use crate::config::{Gate, RunConfig};
use crate::error::CliError;

fn target(gate: Gate) -> Unitary2 {
    match gate {
        Gate::Hadamard => Unitary2::hadamard(),
        Gate::Identity => Unitary2::identity(),
    }
}

fn slug(gate: Gate) -> &'static str {
    match gate {
        Gate::Hadamard => "hadamard",
        Gate::Identity => "identity",
    }
}

fn design_h(cfg: &RunConfig) -> Result<HadamardDcgParams, CliError> {
    let d = &cfg.design;
    Ok(design_hadamard(d.dez_hadamard, d.jmax_hadamard, d.relaxation, &HadamardDesignOptions::default())?.params)
}

fn design_i(cfg: &RunConfig) -> Result<IdentityDcgParams, CliError> {
    Ok(design_identity(cfg.design.dez_identity, &IdentityDesignOptions::default())?.params)
}

fn dcg_pulse(cfg: &RunConfig, gate: Gate) -> Result<PulseSequence, CliError> {
    Ok(match gate {
        Gate::Hadamard => design_h(cfg)?.to_pulse()?,
        Gate::Identity => design_i(cfg)?.to_pulse()?,
    })
}

fn execution(cfg: &RunConfig, gate: Gate) -> Execution {
    match cfg.filter {
        Some(filter) => Execution::Sampled {
            dt: cfg.design.dt,
            round_segments: true,
            distortion: Some(Distortion { model: cfg.exchange_model(gate), filter }),
        },
        None => Execution::Exact,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EnvelopeArg {
    Gaussian,
    ExpEnvelope,
}

impl From<EnvelopeArg> for RamseyEnvelope {
    fn from(e: EnvelopeArg) -> Self {
        match e {
            EnvelopeArg::Gaussian => RamseyEnvelope::Gaussian,
            EnvelopeArg::ExpEnvelope => RamseyEnvelope::Exponential,
        }
    }
}

#[derive(Serialize)]
struct CalibrationReport {
    planted: (f64, f64, f64),
    fit_envelope: RamseyEnvelope,
    exchange: ExchangeFit,
    ramsey: Vec<(f64, RamseyFit)>,
}

/// Synthetic Ramsey traces at every configured voltage, a decaying-sinusoid
/// fit of each, then the exchange model through the fitted frequencies.
pub fn calibrate(cfg: &RunConfig, out: &Path, model: Option<EnvelopeArg>) -> Result<Vec<PathBuf>, CliError> {
    let r = &cfg.ramsey;
    let fit_env = model.map(RamseyEnvelope::from).unwrap_or(r.envelope);
    let times: Vec<f64> = (0..r.points).map(|k| k as f64 * r.time_step).collect();
    let mut fits = Vec::with_capacity(r.voltages.len());
    for (k, &v) in r.voltages.iter().enumerate() {
        let f = qubit_frequency(r.j0, r.v0, r.dez, v);
        let mut series =
            simulate_ramsey(f, r.t2_star, r.amplitude, r.offset, &times, r.noise, r.envelope, cfg.run.seed.wrapping_add(k as u64))?;
        series.voltage_mv = v;
        fits.push((v, fit_ramsey(&series, fit_env)?));
    }
    let points: Vec<(f64, f64)> = fits.iter().map(|(v, f)| (*v, f.frequency_mhz)).collect();
    let exchange = fit_exchange_model(&points)?;

    let mut w = ArtifactWriter::new(out, "calibrate", cfg)?;
    let mut csv = String::from("voltage_mV,f_measured_MHz,f_model_MHz,residual_MHz\n");
    for ((v, f), res) in points.iter().zip(&exchange.residuals) {
        let _ = writeln!(csv, "{}", csv_row(&[*v, *f, exchange.frequency(*v), *res]));
    }
    w.text("exchange_residuals.csv", &csv)?;
    let mut rcsv = String::from("voltage_mV,frequency_MHz,t2_star_ns,amplitude,phase,offset,rms_residual\n");
    for (v, f) in &fits {
        let _ = writeln!(
            rcsv,
            "{}",
            csv_row(&[*v, f.frequency_mhz, f.t2_star_ns, f.amplitude, f.phase, f.offset, f.rms_residual])
        );
    }
    w.text("ramsey_fits.csv", &rcsv)?;
    let report = CalibrationReport { planted: (r.j0, r.v0, r.dez), fit_envelope: fit_env, exchange, ramsey: fits };
    w.json("exchange_fit.json", &report)?;
    eprintln!(
        "J0 = {:.4} MHz, V0 = {:.3} mV, dEz = {:.4} MHz",
        report.exchange.j0_mhz, report.exchange.v0_mv, report.exchange.dez_mhz
    );
    w.finish()
}

fn pulse_csv(seq: &PulseSequence) -> String {
    let mut s = String::from("segment,role,exchange_MHz,duration_ns\n");
    for (i, seg) in seq.segments().iter().enumerate() {
        let role = serde_json::to_value(seg.role).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let _ = writeln!(s, "{i},{role},{},{}", sig12(seg.exchange), sig12(seg.duration));
    }
    s
}

fn curve_csv(c: &ErrorCurve) -> String {
    let mut s = String::from("t_ns,rx,ry,rz,tx,ty,tz\n");
    for (k, (r, t)) in c.r.iter().zip(&c.tangent).enumerate() {
        let _ = writeln!(s, "{}", csv_row(&[k as f64 * c.dt, r.x, r.y, r.z, t.x, t.y, t.z]));
    }
    s
}

/// Designs the configured gate and writes its pulse, error curve and, for
/// the identity, its binormal.
pub fn design(cfg: &RunConfig, out: &Path, gate: Gate) -> Result<Vec<PathBuf>, CliError> {
    let mut w = ArtifactWriter::new(out, "design", cfg)?;
    let name = slug(gate);
    let seq = match gate {
        Gate::Identity => {
            let d = design_identity(cfg.design.dez_identity, &IdentityDesignOptions::default())?;
            let b = build_identity_binormal(d.params.dez, &IdentityShape::of(&d.params), 200)?;
            w.text(&format!("binormal_{name}.csv"), &b.binormal.to_csv())?;
            w.json(&format!("design_{name}.json"), &d)?;
            eprintln!(
                "J1 = {:.4} MHz, J2 = {:.4} MHz, t1 = {:.3} ns, t2 = {:.3} ns",
                d.params.j1, d.params.j2, d.params.t1, d.params.t2
            );
            d.params.to_pulse()?
        }
        Gate::Hadamard => {
            let d = &cfg.design;
            let h = design_hadamard(d.dez_hadamard, d.jmax_hadamard, d.relaxation, &HadamardDesignOptions::default())?;
            w.json(&format!("design_{name}.json"), &h)?;
            eprintln!(
                "J1 = {:.4} MHz, J2 = {:.4} MHz, tb = {:.3} ns, t1 = {:.3} ns, t2 = {:.3} ns",
                h.params.j1, h.params.j2, h.params.tb, h.params.t1, h.params.t2
            );
            h.params.to_pulse()?
        }
    };
    w.text(&format!("pulse_{name}.csv"), &pulse_csv(&seq))?;
    let curve = error_curve_from_pulse(&seq, DEFAULT_SUBSTEP_NS)?;
    w.text(&format!("curve_{name}.csv"), &curve_csv(&curve))?;
    w.finish()
}

fn run_sweep(cfg: &RunConfig, gate: Gate) -> Result<FidelityGrid, CliError> {
    let noise = cfg.noise_spec(gate);
    let exec = execution(cfg, gate);
    Ok(match cfg.sweep.kind {
        SweepKind::Beta => sweep_corrected(&dcg_pulse(cfg, gate)?, &target(gate), &cfg.sweep, &exec, &noise)?,
        SweepKind::Xi => {
            let tg = match gate {
                Gate::Hadamard => TargetGate::Hadamard,
                Gate::Identity => TargetGate::Identity,
            };
            sweep_uncorrected(tg, cfg.dez(gate), &cfg.sweep, &exec, &noise)?
        }
    })
}

/// Fidelity landscape over the configured knob grid.
pub fn sweep(cfg: &RunConfig, out: &Path, gate: Gate) -> Result<Vec<PathBuf>, CliError> {
    let grid = run_sweep(cfg, gate)?;
    let mut w = ArtifactWriter::new(out, "sweep", cfg)?;
    let name = slug(gate);
    w.text(&format!("grid_{name}.csv"), &grid.to_csv())?;
    w.json(&format!("grid_{name}.json"), &grid)?;
    let best = grid.optimum();
    let (a, b) = grid.kind.names();
    eprintln!("optimum {a} = {:.4}, {b} = {:.4}, fidelity {:.5}", best.first, best.second, best.fidelity);
    w.finish()
}

fn table_config(cfg: &RunConfig) -> Result<Table1Config, CliError> {
    let filter = cfg
        .filter
        .ok_or_else(|| CliError::Config("table1 needs a [filter] section for the distorted rows".into()))?;
    let mut t = Table1Config::with_designs(design_h(cfg)?, design_i(cfg)?);
    t.model_hadamard = cfg.exchange_model(Gate::Hadamard);
    t.model_identity = cfg.exchange_model(Gate::Identity);
    t.filter = filter;
    t.sigma_hyperfine = cfg.noise.sigma_hyperfine;
    t.sigma_j_rel = cfg.noise.sigma_j_rel;
    t.realizations_hadamard = cfg.noise.realizations_hadamard;
    t.realizations_identity = cfg.noise.realizations_identity;
    t.seed = cfg.run.seed;
    t.dt = cfg.design.dt;
    t.calibration = cfg.calibration_box;
    t.validate()?;
    Ok(t)
}

/// The six-gate, four-noise fidelity table.
pub fn table(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let t = table1(&table_config(cfg)?)?;
    let mut w = ArtifactWriter::new(out, "table1", cfg)?;
    w.text("table1.csv", &t.to_csv())?;
    w.text("table1.txt", &t.to_text())?;
    w.json("table1.json", &t)?;
    eprint!("{}", t.to_text());
    w.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CutAxis {
    First,
    Second,
}

#[derive(Serialize)]
struct ErrorbarReport<'a> {
    gate: &'a str,
    axis: &'static str,
    fixed_value: f64,
    report: &'a UncertaintyReport,
}

/// Quartic fit of the line cut through the grid optimum.
pub fn errorbars(cfg: &RunConfig, out: &Path, grid_path: &Path, axis: CutAxis) -> Result<Vec<PathBuf>, CliError> {
    let text = std::fs::read_to_string(grid_path)
        .map_err(|e| CliError::Config(format!("cannot read grid {}: {e}", grid_path.display())))?;
    let doc: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", grid_path.display())))?;
    let grid: FidelityGrid = serde_json::from_value(doc.get("result").cloned().unwrap_or(doc))
        .map_err(|e| CliError::Config(format!("{} is not a sweep grid: {e}", grid_path.display())))?;
    let best = grid.optimum();
    let i = grid.first.iter().position(|x| *x == best.first).unwrap_or(0);
    let j = grid.second.iter().position(|x| *x == best.second).unwrap_or(0);
    let (names, xs, ys, fixed) = match axis {
        CutAxis::First => (grid.kind.names().0, grid.first.clone(), grid.fidelity.iter().map(|r| r[j]).collect::<Vec<_>>(), best.second),
        CutAxis::Second => (grid.kind.names().1, grid.second.clone(), grid.fidelity[i].clone(), best.first),
    };
    let report = linecut_errorbar(&xs, &ys)?;
    let mut w = ArtifactWriter::new(out, "errorbars", cfg)?;
    let mut cut = format!("{names},fidelity,fit,residual\n");
    for ((x, y), r) in xs.iter().zip(&ys).zip(&report.residuals) {
        let _ = writeln!(cut, "{}", csv_row(&[*x, *y, report.eval(*x), *r]));
    }
    w.text("linecut.csv", &cut)?;
    w.text("quantiles.csv", &report.quantiles_csv())?;
    w.json("errorbars.json", &ErrorbarReport { gate: &grid.gate, axis: names, fixed_value: fixed, report: &report })?;
    eprintln!("residual std {:.5}", report.residual_std);
    w.finish()
}

#[derive(Serialize)]
struct DistortReport {
    gate: &'static str,
    relative_rms: f64,
}

/// The gate's DCG through the kernel pipeline and through the circuit model.
pub fn distort(cfg: &RunConfig, out: &Path, gate: Gate) -> Result<Vec<PathBuf>, CliError> {
    let filter = cfg.filter.ok_or_else(|| CliError::Config("distort needs a [filter] section".into()))?;
    let circuit = cfg.circuit.ok_or_else(|| CliError::Config("distort needs a [circuit] section".into()))?;
    let seq = dcg_pulse(cfg, gate)?;
    let cmp = compare_distortion_models(&seq, &cfg.exchange_model(gate), &filter, &circuit, cfg.design.dt)?;
    let name = slug(gate);
    let mut w = ArtifactWriter::new(out, "distort", cfg)?;
    w.text(&format!("voltage_ideal_{name}.csv"), &cmp.ideal_voltage.to_csv())?;
    w.text(&format!("voltage_kernel_{name}.csv"), &cmp.kernel_voltage.to_csv())?;
    w.text(&format!("voltage_circuit_{name}.csv"), &cmp.circuit_voltage.to_csv())?;
    w.text(&format!("exchange_kernel_{name}.csv"), &cmp.kernel_exchange.to_csv())?;
    w.text(&format!("exchange_circuit_{name}.csv"), &cmp.circuit_exchange.to_csv())?;
    w.json(&format!("distort_{name}.json"), &DistortReport { gate: name, relative_rms: cmp.relative_rms })?;
    eprintln!("kernel vs circuit RMS: {:.3}% of the voltage swing", 100.0 * cmp.relative_rms);
    w.finish()
}

/// Repeated-seed fidelity spread of the gate's DCG, recalibrated against the
/// distortion the same way as the table.
pub fn scatter(cfg: &RunConfig, out: &Path, gate: Gate) -> Result<Vec<PathBuf>, CliError> {
    use dcg_core::sim::GateRow;
    let (row, seq, exec) = if cfg.filter.is_some() {
        let t = table_config(cfg)?;
        let row = match gate {
            Gate::Hadamard => GateRow::DcgH,
            Gate::Identity => GateRow::DcgI,
        };
        let (k1, k2) = t.calibrate(row)?;
        (row, t.pulse(row, k1, k2)?, t.execution(row))
    } else {
        let row = match gate {
            Gate::Hadamard => GateRow::UndistortedDcgH,
            Gate::Identity => GateRow::UndistortedDcgI,
        };
        (row, dcg_pulse(cfg, gate)?, Execution::Exact)
    };
    let configs = [NoiseConfig::Hyperfine, NoiseConfig::Charge, NoiseConfig::Both];
    let stats: Vec<ScatterStats> = fidelity_scatter(
        &seq,
        &target(gate),
        &exec,
        &cfg.noise_spec(gate),
        &configs,
        cfg.scatter.repeats,
        cfg.run.seed,
    )?;
    let name = slug(gate);
    let mut w = ArtifactWriter::new(out, "scatter", cfg)?;
    let mut csv = String::from("repeat,config,fidelity\n");
    for s in &stats {
        for (k, f) in s.fidelities.iter().enumerate() {
            let label = serde_json::to_value(s.config).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            let _ = writeln!(csv, "{k},{label},{}", sig12(*f));
        }
    }
    w.text(&format!("scatter_{name}.csv"), &csv)?;
    w.json(&format!("scatter_{name}.json"), &(row.label(), &stats))?;
    for s in &stats {
        eprintln!("{:>9}: {:.5} ± {:.5}", s.config.label(), s.mean, s.std);
    }
    w.finish()
}
