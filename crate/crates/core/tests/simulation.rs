use dcg_core::analysis::{fidelity_scatter, linecut_errorbar};
use dcg_core::pulse::{ExchangeModel, FilterSpec, PulseSequence};
use dcg_core::qcore::{process_fidelity, QuantumChannel, Unitary2};
use dcg_core::scqc::{HadamardDcgParams, IdentityDcgParams};
use dcg_core::sim::{
    monte_carlo, monte_carlo_channel, sweep_corrected, Execution, GateRow, NoiseConfig, NoiseSpec, SweepAxis,
    SweepKind, SweepSpec, Table1Config,
};
use dcg_core::tomo::{tomography_of_channel, PovmSet, Readout};

fn hadamard_model() -> ExchangeModel {
    ExchangeModel { j0: 0.05, v0: 10.0, dez: 2.5 }
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let seq = HadamardDcgParams::paper().to_pulse().unwrap();
    let exec = Execution::hardware(hadamard_model(), FilterSpec::paper());
    let noise = NoiseSpec::paper(96, 42);
    let run = || monte_carlo(&seq, &Unitary2::hadamard(), &exec, &noise).unwrap();
    let a = in_pool(1, run);
    let b = in_pool(3, run);
    let c = in_pool(8, run);
    assert_eq!(a.fidelity.to_bits(), b.fidelity.to_bits());
    assert_eq!(a.fidelity.to_bits(), c.fidelity.to_bits());
    assert_eq!(a.realization_fidelities, c.realization_fidelities);
    assert_eq!(a.channel, c.channel);
}

#[test]
fn averaged_channels_are_cptp() {
    for (seq, exec) in [
        (HadamardDcgParams::paper().to_pulse().unwrap(), Execution::hardware(hadamard_model(), FilterSpec::paper())),
        (IdentityDcgParams::paper().to_pulse().unwrap(), Execution::Exact),
        (PulseSequence::uncorrected_hadamard(2.5, 1.0, 1.0).unwrap(), Execution::Exact),
    ] {
        let ch = monte_carlo_channel(&seq, &exec, &NoiseSpec::paper(64, 3)).unwrap();
        assert!(ch.trace_preservation_defect() < 1e-10);
        assert!(ch.choi_min_eigenvalue() > -1e-10);
    }
}

#[test]
fn more_noise_means_lower_fidelity() {
    for (seq, target) in [
        (PulseSequence::uncorrected_hadamard(2.5, 1.0, 1.0).unwrap(), Unitary2::hadamard()),
        (IdentityDcgParams::paper().to_pulse().unwrap(), Unitary2::identity()),
    ] {
        let mut last = 1.0 + 1e-12;
        for scale in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let base = NoiseSpec::paper(128, 9);
            let noise = NoiseSpec {
                sigma_hyperfine: base.sigma_hyperfine * scale,
                sigma_j_rel: base.sigma_j_rel * scale,
                ..base
            };
            let f = monte_carlo(&seq, &target, &Execution::Exact, &noise).unwrap().fidelity;
            assert!(f < last, "{}: scale {scale} gave {f} after {last}", seq.label());
            last = f;
        }
    }
}

/// Sub-grid β1 of the ridge at the smallest β2 minus that at β2 = 1.
fn ridge_bend(filter: FilterSpec, beta1: (f64, f64)) -> f64 {
    let seq = HadamardDcgParams::paper().to_pulse().unwrap();
    let spec = SweepSpec {
        kind: SweepKind::Beta,
        first: SweepAxis::new(beta1.0, beta1.1, 51).unwrap(),
        second: SweepAxis::new(0.5, 1.0, 6).unwrap(),
    };
    let noise = NoiseSpec::noiseless();
    let exec = Execution::hardware(hadamard_model(), filter);
    let g = sweep_corrected(&seq, &Unitary2::hadamard(), &spec, &exec, &noise).unwrap();
    let ridge = g.ridge_interpolated();
    ridge[0].1 - ridge[ridge.len() - 1].1
}

#[test]
fn ridge_bends_down_with_partial_highpass_and_up_with_lowpass() {
    let hp = ridge_bend(FilterSpec::paper(), (0.8, 1.05));
    let lp = ridge_bend(FilterSpec::new(1.0, 0.0, 1.0).unwrap(), (0.95, 1.2));
    assert!(hp < -1e-3, "partial high-pass ridge shift {hp}");
    assert!(lp > 1e-3, "low-pass ridge shift {lp}");
}

#[test]
fn monte_carlo_channel_survives_tomography() {
    let seq = HadamardDcgParams::paper().to_pulse().unwrap();
    let exec = Execution::hardware(hadamard_model(), FilterSpec::paper());
    let ch = monte_carlo_channel(&seq, &exec, &NoiseSpec::paper(128, 5)).unwrap();
    let target = QuantumChannel::from_unitary(&Unitary2::hadamard());
    let est = tomography_of_channel(&ch, &PovmSet::ideal(), Readout::Exact, &target).unwrap();
    assert!((est.chi - ch.chi()).norm() < 1e-6);
    assert!((est.fidelity - process_fidelity(&ch, &target).unwrap()).abs() < 1e-6);
}

/// A line cut whose cells use independent noise draws. The quartic-fit
/// residual spread overestimates the seed-to-seed scatter of a single cell
/// (by about 1.6 with these seeds), but
/// stays within a factor of 2.
#[test]
fn linecut_spread_matches_repeat_scatter() {
    let cfg = Table1Config::paper().unwrap();
    let row = GateRow::DcgH;
    let (k1, k2) = cfg.calibrate(row).unwrap();
    let exec = cfg.execution(row);
    let target = cfg.target(row);
    let noise = NoiseSpec::paper(cfg.realizations_hadamard, 0);
    let xs: Vec<f64> = (0..31).map(|i| k1 - 0.03 + 0.002 * i as f64).collect();
    let cut: Vec<f64> = xs
        .iter()
        .enumerate()
        .map(|(i, &b1)| {
            let seq = cfg.pulse(row, b1, k2).unwrap();
            monte_carlo(&seq, &target, &exec, &noise.with_seed(1000 + i as u64)).unwrap().fidelity
        })
        .collect();
    let fitted = linecut_errorbar(&xs, &cut).unwrap().residual_std;
    let seq = cfg.pulse(row, k1, k2).unwrap();
    let scatter = fidelity_scatter(&seq, &target, &exec, &noise, &[NoiseConfig::Both], 40, 7).unwrap();
    let ratio = fitted / scatter[0].std;
    assert!((0.5..=2.0).contains(&ratio), "fitted {fitted:.5} vs scatter {:.5}", scatter[0].std);
}
