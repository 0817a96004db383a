use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{levenberg_marquardt, LmOptions};

/// Fits whose log-parameter Jacobian is worse conditioned than this are
/// reported as ill-conditioned rather than returned.
pub const EXCHANGE_CONDITION_LIMIT: f64 = 1e3;

/// `f_q(V) = √((J0 e^{V/V0})² + ΔE_Z²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExchangeFit {
    pub j0_mhz: f64,
    pub v0_mv: f64,
    pub dez_mhz: f64,
    /// Covariance of `(J0, V0, ΔE_Z)`.
    pub covariance: [[f64; 3]; 3],
    pub std_errors: [f64; 3],
    /// `f_q(V) − fit`, per point.
    pub residuals: Vec<f64>,
    pub condition_number: f64,
}

impl ExchangeFit {
    pub fn frequency(&self, v_mv: f64) -> f64 {
        qubit_frequency(self.j0_mhz, self.v0_mv, self.dez_mhz, v_mv)
    }

    pub fn exchange(&self, v_mv: f64) -> f64 {
        self.j0_mhz * (v_mv / self.v0_mv).exp()
    }
}

pub fn qubit_frequency(j0: f64, v0: f64, dez: f64, v: f64) -> f64 {
    (j0 * (v / v0).exp()).hypot(dez)
}

/// Least squares in `(ln J0, ln V0, ln ΔE_Z)`. The start takes ΔE_Z from
/// the lowest frequency and `(J0, V0)` from a line through
/// `ln √(f² − ΔE_Z²)` on the J-dominated points.
pub fn fit_exchange_model(points: &[(f64, f64)]) -> Result<ExchangeFit> {
    if points.len() < 4 {
        return Err(Error::invalid(format!("exchange fit needs at least 4 points, got {}", points.len())));
    }
    if points.iter().any(|(v, f)| !v.is_finite() || !(*f > 0.0)) {
        return Err(Error::invalid("voltages must be finite and frequencies > 0"));
    }
    let fmin = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let dez0 = fmin;
    let line: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, f)| *f > 1.2 * dez0)
        .map(|&(v, f)| (v, 0.5 * (f * f - dez0 * dez0).ln()))
        .collect();
    let (ln_j0, v0) = if line.len() >= 2 {
        let n = line.len() as f64;
        let (mx, my) = (line.iter().map(|p| p.0).sum::<f64>() / n, line.iter().map(|p| p.1).sum::<f64>() / n);
        let sxy: f64 = line.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = line.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = sxy / sxx;
        if slope > 0.0 {
            (my - slope * mx, 1.0 / slope)
        } else {
            (dez0.ln(), 1.0)
        }
    } else {
        return Err(Error::IllConditioned {
            condition: f64::INFINITY,
            message: "no points in the exchange-dominated regime; J0 and V0 are unidentifiable".into(),
        });
    };

    let residual = |p: &DVector<f64>| {
        let (j0, v0, dez) = (p[0].exp(), p[1].exp(), p[2].exp());
        DVector::from_iterator(points.len(), points.iter().map(|&(v, f)| qubit_frequency(j0, v0, dez, v) - f))
    };
    let fit = levenberg_marquardt(residual, &[ln_j0, v0.ln(), dez0.ln()], LmOptions::default())?;
    let condition_number = fit.condition_number();
    if !(condition_number < EXCHANGE_CONDITION_LIMIT) {
        return Err(Error::IllConditioned {
            condition: condition_number,
            message: "data do not cover both the exchange- and Zeeman-dominated regimes".into(),
        });
    }
    let vals = [fit.params[0].exp(), fit.params[1].exp(), fit.params[2].exp()];
    // Log-space covariance mapped to linear parameters (first order).
    let cov_log = fit.covariance().ok_or_else(|| Error::FitFailure("singular normal matrix".into()))?;
    let mut covariance = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            covariance[i][j] = cov_log[(i, j)] * vals[i] * vals[j];
        }
    }
    Ok(ExchangeFit {
        j0_mhz: vals[0],
        v0_mv: vals[1],
        dez_mhz: vals[2],
        std_errors: [0, 1, 2].map(|i| covariance[i][i].sqrt()),
        covariance,
        residuals: fit.residuals.iter().map(|r| -r).collect(),
        condition_number,
    })
}

/// `(V, f_q)` points on the model with multiplicative Gaussian noise of
/// relative size `rel_noise`.
pub fn simulate_exchange_points(j0: f64, v0: f64, dez: f64, voltages: &[f64], rel_noise: f64, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    voltages
        .iter()
        .map(|&v| (v, qubit_frequency(j0, v0, dez, v) * (1.0 + rel_noise * normal.sample(&mut rng))))
        .collect()
}
