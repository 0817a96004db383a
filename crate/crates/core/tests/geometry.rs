mod common;

use common::{curvature_error, torsion_error, Wobble};
use dcg_core::scqc::{design_identity, error_curve_from_pulse, HadamardDcgParams, IdentityDcgParams, IdentityDesignOptions};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    /// The space curve generated from any smooth binormal has torsion ±2π ΔE_Z.
    #[test]
    fn torsion_is_constant(u in prop::array::uniform6(0.0..1.0f64), dez in 0.5..5.0f64, duration in 50.0..400.0f64) {
        let (worst, checked) = torsion_error(&Wobble::from_unit(u), dez, duration);
        prop_assert!(worst < 0.01, "relative torsion error {worst}");
        prop_assert!(checked > 0.5);
    }
}

#[test]
fn curvature_tracks_exchange_on_designed_pulses() {
    for seq in [
        HadamardDcgParams::paper().to_pulse().unwrap(),
        IdentityDcgParams::paper().to_pulse().unwrap(),
        design_identity(2.9, &IdentityDesignOptions::default()).unwrap().params.to_pulse().unwrap(),
    ] {
        let e = curvature_error(&seq);
        assert!(e < 0.01, "{}: {e}", seq.label());
    }
}

#[test]
fn identity_design_closes() {
    let d = design_identity(2.9, &IdentityDesignOptions::default()).unwrap();
    let seq = d.params.to_pulse().unwrap();
    let c = error_curve_from_pulse(&seq, 0.1).unwrap();
    assert!(c.end().norm() < 0.05 * seq.total_duration(), "{} vs {}", c.end().norm(), seq.total_duration());
    assert!(d.closure_residual < 0.05 * seq.total_duration());
}

#[test]
fn unit_speed_error_curves() {
    let c = error_curve_from_pulse(&HadamardDcgParams::paper().to_pulse().unwrap(), 0.1).unwrap();
    assert!(c.speed_defect() < 1e-9);
}
