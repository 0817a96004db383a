use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::MHZ_NS;

/// Quasistatic Gaussian noise: one hyperfine offset and one relative exchange
/// error per realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Standard deviation of the ΔE_Z offset, MHz.
    pub sigma_hyperfine: f64,
    /// σ_J/J.
    pub sigma_j_rel: f64,
    pub realizations: usize,
    pub seed: u64,
    pub hyperfine: bool,
    pub charge: bool,
}

impl NoiseSpec {
    pub const PAPER_SIGMA_HYPERFINE: f64 = 0.2867;
    pub const PAPER_SIGMA_J_REL: f64 = 0.012;

    pub fn paper(realizations: usize, seed: u64) -> Self {
        Self {
            sigma_hyperfine: Self::PAPER_SIGMA_HYPERFINE,
            sigma_j_rel: Self::PAPER_SIGMA_J_REL,
            realizations,
            seed,
            hyperfine: true,
            charge: true,
        }
    }

    /// One noiseless realization.
    pub fn noiseless() -> Self {
        Self { sigma_hyperfine: 0.0, sigma_j_rel: 0.0, realizations: 1, seed: 0, hyperfine: false, charge: false }
    }

    pub fn hyperfine_only(sigma: f64, realizations: usize, seed: u64) -> Self {
        Self { sigma_hyperfine: sigma, sigma_j_rel: 0.0, realizations, seed, hyperfine: true, charge: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_hyperfine >= 0.0 && self.sigma_j_rel >= 0.0)
            || !self.sigma_hyperfine.is_finite()
            || !self.sigma_j_rel.is_finite()
        {
            return Err(Error::invalid("noise standard deviations must be finite and ≥ 0"));
        }
        if self.realizations == 0 {
            return Err(Error::invalid("at least one noise realization is required"));
        }
        Ok(())
    }

    pub fn with_config(&self, config: NoiseConfig) -> Self {
        let (hyperfine, charge) = config.toggles();
        Self { hyperfine, charge, ..*self }
    }

    pub fn with_realizations(&self, realizations: usize) -> Self {
        Self { realizations, ..*self }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..*self }
    }

    /// True when no realization can differ from the noiseless one.
    pub fn is_silent(&self) -> bool {
        !(self.hyperfine && self.sigma_hyperfine > 0.0) && !(self.charge && self.sigma_j_rel > 0.0)
    }
}

/// The four noise columns of the fidelity table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseConfig {
    Both,
    Hyperfine,
    Charge,
    Off,
}

impl NoiseConfig {
    pub const ALL: [NoiseConfig; 4] = [NoiseConfig::Both, NoiseConfig::Hyperfine, NoiseConfig::Charge, NoiseConfig::Off];

    pub fn toggles(self) -> (bool, bool) {
        match self {
            NoiseConfig::Both => (true, true),
            NoiseConfig::Hyperfine => (true, false),
            NoiseConfig::Charge => (false, true),
            NoiseConfig::Off => (false, false),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            NoiseConfig::Both => "dEz & J",
            NoiseConfig::Hyperfine => "dEz",
            NoiseConfig::Charge => "J",
            NoiseConfig::Off => "no noise",
        }
    }
}

/// `(δΔE_Z, exchange factor)` for realization `k`. Both normals are always
/// drawn from the `(seed, k)` ChaCha stream, so toggling one noise source
/// leaves the other's draws unchanged.
pub fn sample_noise(spec: &NoiseSpec, k: usize) -> Result<(f64, f64)> {
    if k >= spec.realizations {
        return Err(Error::invalid(format!("realization {k} out of range (N = {})", spec.realizations)));
    }
    Ok(draw(spec, k))
}

pub(crate) fn draw(spec: &NoiseSpec, k: usize) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(k as u64);
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    let shift = if spec.hyperfine { spec.sigma_hyperfine * a } else { 0.0 };
    let factor = if spec.charge { 1.0 + spec.sigma_j_rel * b } else { 1.0 };
    (shift, factor)
}

/// `T2* = 1/(√2 π σ)` in ns for σ in MHz.
pub fn dephasing_time(sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("σ must be > 0, got {sigma}")));
    }
    Ok(1.0 / (SQRT_2 * PI * sigma * MHZ_NS))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toggles_off_gives_no_noise() {
        let spec = NoiseSpec::paper(10, 3).with_config(NoiseConfig::Off);
        for k in 0..10 {
            assert_eq!(sample_noise(&spec, k).unwrap(), (0.0, 1.0));
        }
        assert!(sample_noise(&spec, 10).is_err());
    }

    #[test]
    fn hyperfine_statistics() {
        let n = 100_000;
        let spec = NoiseSpec::paper(n, 11);
        let xs: Vec<f64> = (0..n).map(|k| draw(&spec, k).0).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!(mean.abs() < 3.0 * 0.2867 / (n as f64).sqrt());
        assert!((sd / 0.2867 - 1.0).abs() < 0.01, "sd = {sd}");
    }

    #[test]
    fn draws_are_shared_between_configs() {
        let both = NoiseSpec::paper(4, 5);
        for k in 0..4 {
            let (s, f) = draw(&both, k);
            assert_eq!(draw(&both.with_config(NoiseConfig::Hyperfine), k), (s, 1.0));
            assert_eq!(draw(&both.with_config(NoiseConfig::Charge), k), (0.0, f));
        }
    }

    #[test]
    fn dephasing_times() {
        assert!((dephasing_time(0.2867).unwrap() - 785.0).abs() < 0.5);
        assert!((dephasing_time(0.25).unwrap() - 900.3).abs() < 0.05);
        let a = dephasing_time(0.3).unwrap();
        assert!((dephasing_time(0.6).unwrap() - a / 2.0).abs() < 1e-9);
        assert!(dephasing_time(0.0).is_err());
    }
}
