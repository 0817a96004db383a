use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::povm::{Axis, AxisCounts, PovmSet};
use crate::error::{Error, Result};
use crate::qcore::{su2_evolve, DensityMatrix2};
use crate::quadrature::gauss_hermite;

/// One `(state, setting, time, axis)` cell of a tomography run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyRecord {
    pub state_label: String,
    #[serde(rename = "setting_MHz")]
    pub setting_mhz: f64,
    pub time_ns: f64,
    pub axis: Axis,
    pub shots: u64,
    pub successes: u64,
}

/// Points of one `(state, setting)` series at one evolution time.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub time_ns: f64,
    pub counts: Vec<AxisCounts>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub state_label: String,
    pub setting_mhz: f64,
    pub points: Vec<SeriesPoint>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TomographyDataset {
    pub records: Vec<TomographyRecord>,
}

impl TomographyDataset {
    pub fn new(records: Vec<TomographyRecord>) -> Result<Self> {
        for r in &records {
            if r.successes > r.shots {
                return Err(Error::invalid(format!(
                    "{} successes exceed {} shots ({} at {} ns)",
                    r.successes, r.shots, r.state_label, r.time_ns
                )));
            }
        }
        Ok(Self { records })
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(r).map_err(|e| Error::invalid(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let records: std::result::Result<Vec<TomographyRecord>, _> = rd.deserialize().collect();
        Self::new(records.map_err(|e| Error::invalid(format!("bad tomography CSV: {e}")))?)
    }

    /// Groups records into `(state, setting)` series in order of first
    /// appearance, each sorted by time.
    pub fn series(&self) -> Vec<Series> {
        let mut out: Vec<Series> = Vec::new();
        for r in &self.records {
            let idx = match out.iter().position(|s| s.state_label == r.state_label && s.setting_mhz == r.setting_mhz) {
                Some(i) => i,
                None => {
                    out.push(Series { state_label: r.state_label.clone(), setting_mhz: r.setting_mhz, points: vec![] });
                    out.len() - 1
                }
            };
            let s = &mut out[idx];
            let c = AxisCounts { axis: r.axis, shots: r.shots, successes: r.successes };
            match s.points.iter_mut().find(|p| p.time_ns == r.time_ns) {
                Some(p) => p.counts.push(c),
                None => s.points.push(SeriesPoint { time_ns: r.time_ns, counts: vec![c] }),
            }
        }
        for s in &mut out {
            s.points.sort_by(|a, b| a.time_ns.total_cmp(&b.time_ns));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedState {
    pub label: String,
    pub bloch: [f64; 3],
}

/// Synthetic calibration run: prepared states evolve under exchange `J`
/// (the setting) and a quasistatically fluctuating ΔE_Z, then are measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub dez: f64,
    pub sigma_hyperfine: f64,
    pub states: Vec<PreparedState>,
    pub settings_mhz: Vec<f64>,
    pub times_ns: Vec<f64>,
    pub shots: u64,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        let st = |l: &str, b: [f64; 3]| PreparedState { label: l.into(), bloch: b };
        Self {
            dez: 2.9,
            sigma_hyperfine: 0.2867,
            states: vec![st("0", [0.0, 0.0, 1.0]), st("1", [0.0, 0.0, -1.0]), st("+x", [1.0, 0.0, 0.0]), st("+y", [0.0, 1.0, 0.0])],
            settings_mhz: vec![0.0, 3.0],
            times_ns: (0..60).map(|k| 20.0 * k as f64).collect(),
            shots: 10_000,
            seed: 1,
        }
    }
}

/// Ensemble-averaged state after `t` ns under `J` with Gaussian ΔE_Z spread
/// (Gauss-Hermite quadrature over the offset).
pub fn ensemble_state(rho0: &DensityMatrix2, j: f64, dez: f64, sigma: f64, t: f64) -> Result<DensityMatrix2> {
    let nodes = if sigma > 0.0 { gauss_hermite(40) } else { vec![(0.0, 1.0)] };
    let mut m = nalgebra::Matrix2::zeros();
    for (x, w) in nodes {
        let u = su2_evolve(j, dez + sigma * x, t)?;
        let um = u.matrix();
        m += um * rho0.matrix() * um.adjoint() * num_complex::Complex64::from(w);
    }
    DensityMatrix2::new((m + m.adjoint()) * num_complex::Complex64::from(0.5))
}

/// Counts from `truth` for every `(state, setting, time, axis)` cell. Each
/// cell draws from its own `(seed, cell)` stream.
pub fn simulate_dataset(spec: &DatasetSpec, truth: &PovmSet) -> Result<TomographyDataset> {
    if spec.shots == 0 || spec.states.is_empty() || spec.settings_mhz.is_empty() || spec.times_ns.is_empty() {
        return Err(Error::invalid("dataset needs states, settings, times and at least one shot"));
    }
    let mut cells = Vec::new();
    for s in &spec.states {
        for &j in &spec.settings_mhz {
            for &t in &spec.times_ns {
                cells.push((s, j, t));
            }
        }
    }
    let records: Vec<Result<Vec<TomographyRecord>>> = cells
        .par_iter()
        .enumerate()
        .map(|(idx, &(s, j, t))| {
            let rho0 = DensityMatrix2::from_bloch(Vector3::from(s.bloch))?;
            let rho = ensemble_state(&rho0, j, spec.dez, spec.sigma_hyperfine, t)?;
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(idx as u64);
            Axis::ALL
                .iter()
                .map(|&a| {
                    let p = truth.probability(&rho, a).clamp(0.0, 1.0);
                    let b = Binomial::new(spec.shots, p).map_err(|e| Error::invalid(e.to_string()))?;
                    Ok(TomographyRecord {
                        state_label: s.label.clone(),
                        setting_mhz: j,
                        time_ns: t,
                        axis: a,
                        shots: spec.shots,
                        successes: b.sample(&mut rng),
                    })
                })
                .collect()
        })
        .collect();
    let mut all = Vec::with_capacity(cells.len() * 3);
    for r in records {
        all.extend(r?);
    }
    TomographyDataset::new(all)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let spec = DatasetSpec { times_ns: vec![0.0, 40.0], settings_mhz: vec![0.0], shots: 100, ..Default::default() };
        let ds = simulate_dataset(&spec, &PovmSet::ideal()).unwrap();
        assert_eq!(ds.records.len(), 4 * 2 * 3);
        let text = ds.to_csv().unwrap();
        assert!(text.starts_with("state_label,setting_MHz,time_ns,axis,shots,successes"));
        assert_eq!(TomographyDataset::from_csv(&text).unwrap(), ds);
        let series = ds.series();
        assert_eq!(series.len(), 4);
        assert_eq!(series[0].points.len(), 2);
        assert_eq!(series[0].points[0].counts.len(), 3);
    }

    #[test]
    fn overfull_counts_rejected() {
        let r = TomographyRecord { state_label: "0".into(), setting_mhz: 0.0, time_ns: 0.0, axis: Axis::Z, shots: 5, successes: 6 };
        assert!(TomographyDataset::new(vec![r]).is_err());
    }

    #[test]
    fn ensemble_dephases() {
        let plus = DensityMatrix2::from_bloch(Vector3::new(0.0, 0.0, 1.0)).unwrap();
        let long = ensemble_state(&plus, 0.0, 2.9, 0.2867, 2000.0).unwrap();
        assert!(long.bloch().norm() < 0.05);
        let none = ensemble_state(&plus, 0.0, 2.9, 0.0, 2000.0).unwrap();
        assert!((none.bloch().norm() - 1.0).abs() < 1e-12);
    }
}
