//! POVM self-calibration from purity smoothness.
//!
//! A miscalibrated measurement turns the smooth dephasing of an evolving
//! state into a purity trace that oscillates at the precession frequency.
//! The fit adjusts the per-axis visibility and offset until every series
//! follows `|r|² = floor + (A0 − floor)·env(t/T)`, with `A0` pinned by the
//! decay model. Pinning `A0` fixes the overall visibility scale, which purity
//! smoothness alone cannot see.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::dataset::{Series, TomographyDataset};
use super::povm::{frequencies, Axis, AxisPovm, PovmSet};
use crate::error::{Error, Result};
use crate::optim::{levenberg_marquardt, LmOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Envelope {
    /// `exp(−(t/T)²)`, quasistatic noise.
    Gaussian,
    /// `exp(−t/T)`.
    Exponential,
}

/// Smooth purity model the calibration fits towards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayModel {
    pub envelope: Envelope,
    /// Squared Bloch length at `t = 0`; 1 for pure preparations.
    pub initial_length_sq: f64,
}

impl Default for DecayModel {
    fn default() -> Self {
        Self { envelope: Envelope::Gaussian, initial_length_sq: 1.0 }
    }
}

impl DecayModel {
    fn length_sq(&self, t: f64, decay_time: f64, floor: f64) -> f64 {
        let x = t / decay_time;
        let env = match self.envelope {
            Envelope::Gaussian => (-x * x).exp(),
            Envelope::Exponential => (-x).exp(),
        };
        floor + (self.initial_length_sq - floor) * env
    }
}

/// Fitted decay of one `(state, setting)` series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesDecay {
    pub state_label: String,
    pub setting_mhz: f64,
    pub decay_time_ns: f64,
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmCalibration {
    pub povm: PovmSet,
    /// RMS of purity minus the smooth model after the fit.
    pub rms_residual: f64,
    pub series: Vec<SeriesDecay>,
    pub iterations: usize,
}

/// Pooled frequencies per time point of each series.
struct Observed {
    times: Vec<f64>,
    freqs: Vec<[f64; 3]>,
}

fn observe(series: &[Series]) -> Result<Vec<Observed>> {
    series
        .iter()
        .map(|s| {
            let mut times = Vec::with_capacity(s.points.len());
            let mut freqs = Vec::with_capacity(s.points.len());
            for p in &s.points {
                times.push(p.time_ns);
                freqs.push(frequencies(&p.counts)?);
            }
            Ok(Observed { times, freqs })
        })
        .collect()
}

fn check_coverage(ds: &TomographyDataset) -> Result<Vec<Series>> {
    let series = ds.series();
    let mut settings: Vec<f64> = series.iter().map(|s| s.setting_mhz).collect();
    settings.sort_by(f64::total_cmp);
    settings.dedup();
    if settings.len() < 2 {
        return Err(Error::invalid(format!(
            "POVM calibration needs at least 2 evolution settings, got {}",
            settings.len()
        )));
    }
    if let Some(s) = series.iter().find(|s| s.points.len() < 8) {
        return Err(Error::invalid(format!(
            "series '{}' at {} MHz has {} time points; at least 8 are needed",
            s.state_label,
            s.setting_mhz,
            s.points.len()
        )));
    }
    Ok(series)
}

/// Raw linear-inversion `|r|²` (no projection onto the ball, so the residual
/// stays smooth in the POVM parameters).
fn length_sq(freqs: &[f64; 3], povm: &[f64]) -> f64 {
    (0..3)
        .map(|a| {
            let (v, o) = (povm[2 * a], povm[2 * a + 1]);
            let r = (2.0 * freqs[a] - 1.0 - o) / v;
            r * r
        })
        .sum()
}

// Tiny pull on log T so that series that never decay (state along the
// rotation axis) keep a well-posed normal matrix.
const LOG_T_PRIOR: f64 = 1e-4;

fn residuals(obs: &[Observed], model: &DecayModel, povm: &[f64], decay: &[f64], t_ref: f64) -> DVector<f64> {
    let n: usize = obs.iter().map(|o| o.times.len()).sum::<usize>() + obs.len();
    let mut out = Vec::with_capacity(n);
    if (0..3).any(|a| povm[2 * a].abs() < 1e-6) {
        return DVector::from_element(n, f64::NAN);
    }
    for (s, o) in obs.iter().enumerate() {
        let (ln_t, floor) = (decay[2 * s], decay[2 * s + 1]);
        let tdec = ln_t.exp();
        for (t, f) in o.times.iter().zip(&o.freqs) {
            // Purity (1 + |r|²)/2 against the model purity.
            out.push(0.5 * (length_sq(f, povm) - model.length_sq(*t, tdec, floor)));
        }
        out.push(LOG_T_PRIOR * (ln_t - t_ref.ln()));
    }
    DVector::from_vec(out)
}

fn initial_decay(obs: &[Observed]) -> (Vec<f64>, f64) {
    let span = obs
        .iter()
        .flat_map(|o| o.times.iter().copied())
        .fold(0.0, f64::max)
        .max(1.0);
    let t_ref = 0.5 * span;
    (obs.iter().flat_map(|_| [t_ref.ln(), 0.5]).collect(), t_ref)
}

/// Fits per-series decay with the POVM held fixed; returns the decay params
/// and the RMS purity residual.
fn fit_decays(obs: &[Observed], model: &DecayModel, povm: &[f64]) -> Result<(Vec<f64>, f64)> {
    let (d0, t_ref) = initial_decay(obs);
    let mut params = Vec::with_capacity(d0.len());
    let mut sq = 0.0;
    let mut count = 0usize;
    for (s, o) in obs.iter().enumerate() {
        let one = std::slice::from_ref(o);
        let fit = levenberg_marquardt(
            |p: &DVector<f64>| residuals(one, model, povm, p.as_slice(), t_ref),
            &d0[2 * s..2 * s + 2],
            LmOptions::default(),
        )?;
        let m = o.times.len();
        sq += fit.residuals.rows(0, m).norm_squared();
        count += m;
        params.extend(fit.params.iter());
    }
    Ok((params, (sq / count as f64).sqrt()))
}

fn povm_vector(povm: &PovmSet) -> Vec<f64> {
    Axis::ALL
        .iter()
        .flat_map(|&a| {
            let p = povm.axis(a);
            [p.visibility, p.offset]
        })
        .collect()
}

/// RMS deviation of the reconstructed purity from the best smooth decay,
/// with `povm` held fixed. Small for a correct POVM.
pub fn purity_oscillation(ds: &TomographyDataset, povm: &PovmSet, model: &DecayModel) -> Result<f64> {
    let series = check_coverage(ds)?;
    let obs = observe(&series)?;
    Ok(fit_decays(&obs, model, &povm_vector(povm))?.1)
}

/// Least-squares fit of visibility and offset on each axis so that the
/// reconstructed purity of every series decays smoothly.
///
/// The fitted parameters are pulled back onto `|offset| + |visibility| ≤ 1`
/// by shrinking the visibility when shot noise pushes them just outside.
pub fn calibrate_povm(ds: &TomographyDataset, model: &DecayModel) -> Result<PovmCalibration> {
    if !(model.initial_length_sq > 0.0 && model.initial_length_sq <= 1.0) {
        return Err(Error::invalid("initial squared Bloch length must lie in (0, 1]"));
    }
    let series = check_coverage(ds)?;
    let obs = observe(&series)?;
    let ideal = povm_vector(&PovmSet::ideal());
    let (decay0, _) = fit_decays(&obs, model, &ideal)?;
    let (_, t_ref) = initial_decay(&obs);

    let mut p0 = ideal.clone();
    p0.extend(decay0);
    let fit = levenberg_marquardt(
        |p: &DVector<f64>| residuals(&obs, model, &p.as_slice()[..6], &p.as_slice()[6..], t_ref),
        &p0,
        LmOptions { max_iterations: 2000, ..LmOptions::default() },
    )
    .map_err(|e| Error::Calibration(format!("POVM fit did not converge: {e}")))?;

    let p = fit.params.as_slice();
    let mut axes = [AxisPovm::IDEAL; 3];
    for (a, ax) in axes.iter_mut().enumerate() {
        let (mut v, o) = (p[2 * a], p[2 * a + 1]);
        if !v.is_finite() || !o.is_finite() || o.abs() >= 1.0 || v.abs() < 1e-6 {
            return Err(Error::Calibration(format!(
                "{} axis fit left the physical region (visibility {v}, offset {o}); residual {:.3e}",
                Axis::ALL[a],
                fit.sum_of_squares()
            )));
        }
        // A negative visibility is a relabelled outcome; keep the sign.
        v = v.signum() * v.abs().min(1.0 - o.abs());
        *ax = AxisPovm { visibility: v, offset: o };
    }
    let povm = PovmSet::new(axes[0], axes[1], axes[2])?;
    let (decays, rms) = fit_decays(&obs, model, &povm_vector(&povm))?;
    let series = series
        .iter()
        .enumerate()
        .map(|(s, ser)| SeriesDecay {
            state_label: ser.state_label.clone(),
            setting_mhz: ser.setting_mhz,
            decay_time_ns: decays[2 * s].exp(),
            floor: decays[2 * s + 1],
        })
        .collect();
    Ok(PovmCalibration { povm, rms_residual: rms, series, iterations: fit.iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tomo::dataset::{simulate_dataset, DatasetSpec};

    fn planted(v: [f64; 3], o: [f64; 3]) -> PovmSet {
        let ax = |i: usize| AxisPovm { visibility: v[i], offset: o[i] };
        PovmSet::new(ax(0), ax(1), ax(2)).unwrap()
    }

    fn assert_close(fit: &PovmSet, truth: &PovmSet, tol: f64) {
        for a in Axis::ALL {
            let (f, t) = (fit.axis(a), truth.axis(a));
            assert!((f.visibility - t.visibility).abs() < tol, "{a}: {f:?} vs {t:?}");
            assert!((f.offset - t.offset).abs() < tol, "{a}: {f:?} vs {t:?}");
        }
    }

    #[test]
    fn ideal_povm_is_self_consistent() {
        let ds = simulate_dataset(&DatasetSpec::default(), &PovmSet::ideal()).unwrap();
        let cal = calibrate_povm(&ds, &DecayModel::default()).unwrap();
        assert_close(&cal.povm, &PovmSet::ideal(), 0.02);
    }

    #[test]
    fn recovers_low_z_visibility() {
        let truth = planted([1.0, 1.0, 0.85], [0.0; 3]);
        let ds = simulate_dataset(&DatasetSpec::default(), &truth).unwrap();
        let cal = calibrate_povm(&ds, &DecayModel::default()).unwrap();
        assert!((cal.povm.axis(Axis::Z).visibility - 0.85).abs() < 0.03, "{:?}", cal.povm);
        assert!((cal.povm.axis(Axis::X).visibility - 1.0).abs() < 0.03);
        assert!((cal.povm.axis(Axis::Y).visibility - 1.0).abs() < 0.03);
    }

    #[test]
    fn recovers_visibility_and_offset() {
        let truth = planted([0.9, 0.82, 0.88], [0.04, -0.03, 0.06]);
        let ds = simulate_dataset(&DatasetSpec { seed: 11, ..Default::default() }, &truth).unwrap();
        let cal = calibrate_povm(&ds, &DecayModel::default()).unwrap();
        for a in Axis::ALL {
            let (f, t) = (cal.povm.axis(a), truth.axis(a));
            assert!((f.visibility / t.visibility - 1.0).abs() < 0.03, "{a}: {f:?} vs {t:?}");
            assert!((f.offset - t.offset).abs() < 0.03, "{a}: {f:?} vs {t:?}");
        }
    }

    #[test]
    fn calibration_flattens_purity() {
        let truth = planted([0.95, 0.8, 0.85], [0.02, 0.0, -0.05]);
        let ds = simulate_dataset(&DatasetSpec::default(), &truth).unwrap();
        let model = DecayModel::default();
        let before = purity_oscillation(&ds, &PovmSet::ideal(), &model).unwrap();
        let cal = calibrate_povm(&ds, &model).unwrap();
        let after = purity_oscillation(&ds, &cal.povm, &model).unwrap();
        assert!(before > 5.0 * after, "before {before:.4}, after {after:.4}");
    }

    #[test]
    fn coverage_is_enforced() {
        let one_setting = DatasetSpec { settings_mhz: vec![0.0], ..Default::default() };
        let ds = simulate_dataset(&one_setting, &PovmSet::ideal()).unwrap();
        assert!(matches!(calibrate_povm(&ds, &DecayModel::default()), Err(Error::InvalidArgument(_))));
        let short = DatasetSpec { times_ns: (0..5).map(|k| 50.0 * k as f64).collect(), ..Default::default() };
        let ds = simulate_dataset(&short, &PovmSet::ideal()).unwrap();
        assert!(calibrate_povm(&ds, &DecayModel::default()).is_err());
    }
}
