mod common;

use common::random_channel;
use dcg_core::qcore::{process_fidelity, QuantumChannel, Unitary2};
use dcg_core::tomo::{
    calibrate_povm, simulate_dataset, tomography_of_channel, Axis, AxisPovm, DatasetSpec, DecayModel, PovmSet,
    Readout, TomographyDataset,
};
use proptest::prelude::*;

fn planted() -> PovmSet {
    PovmSet::new(
        AxisPovm { visibility: 0.9, offset: 0.03 },
        AxisPovm { visibility: 0.84, offset: -0.02 },
        AxisPovm { visibility: 0.88, offset: 0.05 },
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn exact_tomography_reproduces_random_channels(seed in any::<u64>(), imperfect in any::<bool>()) {
        let ch = random_channel(seed);
        prop_assert!(ch.is_cptp(1e-10));
        let povm = if imperfect { planted() } else { PovmSet::ideal() };
        let target = QuantumChannel::from_unitary(&Unitary2::hadamard());
        let est = tomography_of_channel(&ch, &povm, Readout::Exact, &target).unwrap();
        prop_assert!((est.chi - ch.chi()).norm() < 1e-8, "{}", (est.chi - ch.chi()).norm());
        prop_assert!((est.fidelity - process_fidelity(&ch, &target).unwrap()).abs() < 1e-8);
    }
}

#[test]
fn finite_shots_converge() {
    let ch = random_channel(3);
    let target = QuantumChannel::identity();
    let err = |shots| {
        let e = tomography_of_channel(&ch, &PovmSet::ideal(), Readout::Shots { shots, seed: 1 }, &target).unwrap();
        assert!(e.channel.is_cptp(1e-8));
        (e.chi - ch.chi()).norm()
    };
    assert!(err(1_000_000) < err(1_000));
    assert!(err(1_000_000) < 5e-3);
}

#[test]
fn povm_calibration_recovers_planted_visibilities() {
    let truth = planted();
    let ds = simulate_dataset(&DatasetSpec { seed: 4, ..Default::default() }, &truth).unwrap();
    let ds = TomographyDataset::from_csv(&ds.to_csv().unwrap()).unwrap();
    let cal = calibrate_povm(&ds, &DecayModel::default()).unwrap();
    for a in Axis::ALL {
        let (f, t) = (cal.povm.axis(a).visibility, truth.axis(a).visibility);
        assert!((f / t - 1.0).abs() < 0.03, "{a}: {f} vs {t}");
    }
}
