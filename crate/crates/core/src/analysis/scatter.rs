use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pulse::PulseSequence;
use crate::qcore::Unitary2;
use crate::sim::{monte_carlo, Execution, NoiseConfig, NoiseSpec};

/// Spread of the Monte Carlo fidelity of one gate under one noise
/// configuration across independently seeded runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterStats {
    pub config: NoiseConfig,
    pub mean: f64,
    /// Sample standard deviation over repeats.
    pub std: f64,
    pub fidelities: Vec<f64>,
}

/// Repeats `monte_carlo` `repeats` times per configuration with seeds
/// `seed, seed + 1, …`. Configurations share the seed of each repeat.
pub fn fidelity_scatter(
    seq: &PulseSequence,
    target: &Unitary2,
    exec: &Execution,
    noise: &NoiseSpec,
    configs: &[NoiseConfig],
    repeats: usize,
    seed: u64,
) -> Result<Vec<ScatterStats>> {
    if repeats < 20 {
        return Err(Error::invalid(format!("scatter needs at least 20 repeats, got {repeats}")));
    }
    configs
        .iter()
        .map(|&config| {
            let fidelities = (0..repeats as u64)
                .map(|r| {
                    let spec = noise.with_config(config).with_seed(seed.wrapping_add(r));
                    Ok(monte_carlo(seq, target, exec, &spec)?.fidelity)
                })
                .collect::<Result<Vec<f64>>>()?;
            let (mean, std) = mean_std(&fidelities);
            Ok(ScatterStats { config, mean, std, fidelities })
        })
        .collect()
}

pub(crate) fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 || x.iter().all(|v| *v == x[0]) {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::invalid("slope needs at least 2 points"));
    }
    if points.iter().any(|(x, y)| !(*x > 0.0) || !(*y > 0.0)) {
        return Err(Error::invalid("log-log slope needs positive coordinates"));
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::invalid("abscissae must not all coincide"));
    }
    Ok(sxy / sxx)
}
