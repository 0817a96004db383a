use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

const DEGREE: usize = 4;

/// Quartic fit of a fidelity line cut and the spread of its residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    /// Coefficients of `Σ c_k u^k` with `u = (x − center)/scale`.
    pub coefficients: Vec<f64>,
    pub center: f64,
    pub scale: f64,
    pub residuals: Vec<f64>,
    /// Sample standard deviation of the residuals.
    pub residual_std: f64,
    /// `(normal quantile, sorted residual)` with Blom plotting positions.
    pub quantile_pairs: Vec<(f64, f64)>,
}

impl UncertaintyReport {
    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.scale;
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * u + c)
    }

    pub fn quantiles_csv(&self) -> String {
        let mut s = String::from("normal_quantile,residual\n");
        for (q, r) in &self.quantile_pairs {
            s.push_str(&format!("{},{}\n", crate::fmt::sig12(*q), crate::fmt::sig12(*r)));
        }
        s
    }
}

/// Standard normal quantiles at the Blom positions `(i − 3/8)/(n + 1/4)`.
pub fn blom_quantiles(n: usize) -> Vec<f64> {
    let normal = Normal::standard();
    (1..=n)
        .map(|i| normal.inverse_cdf((i as f64 - 0.375) / (n as f64 + 0.25)))
        .collect()
}

/// Degree-4 least squares through `(xs, values)`; the uncertainty is the
/// standard deviation of the residuals.
pub fn linecut_errorbar(xs: &[f64], values: &[f64]) -> Result<UncertaintyReport> {
    if xs.len() != values.len() {
        return Err(Error::invalid(format!("{} abscissae but {} values", xs.len(), values.len())));
    }
    let n = values.len();
    if n < 8 {
        return Err(Error::invalid(format!("line cut needs at least 8 points, got {n}")));
    }
    let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if !(hi > lo) {
        return Err(Error::invalid("line cut abscissae must not all coincide"));
    }
    let center = 0.5 * (lo + hi);
    let scale = 0.5 * (hi - lo);
    let vander = DMatrix::from_fn(n, DEGREE + 1, |i, k| ((xs[i] - center) / scale).powi(k as i32));
    let y = DVector::from_column_slice(values);
    let coef = vander
        .clone()
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|e| Error::invalid(e.to_string()))?;
    let residuals: Vec<f64> = (y - &vander * &coef).iter().copied().collect();
    let mean = residuals.iter().sum::<f64>() / n as f64;
    let residual_std = (residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let mut sorted = residuals.clone();
    sorted.sort_by(f64::total_cmp);
    let quantile_pairs = blom_quantiles(n).into_iter().zip(sorted).collect();
    Ok(UncertaintyReport {
        coefficients: coef.iter().copied().collect(),
        center,
        scale,
        residuals,
        residual_std,
        quantile_pairs,
    })
}

/// Line cut with unit-spaced abscissae.
pub fn linecut_errorbar_indexed(values: &[f64]) -> Result<UncertaintyReport> {
    let xs: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
    linecut_errorbar(&xs, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::Distribution;

    fn quartic(x: f64) -> f64 {
        0.998 - 0.3 * (x - 1.02).powi(2) + 0.8 * (x - 1.0).powi(3) - 2.0 * (x - 1.0).powi(4)
    }

    fn xs() -> Vec<f64> {
        (0..31).map(|i| 0.85 + 0.01 * i as f64).collect()
    }

    #[test]
    fn exact_quartic_has_no_residual() {
        let x = xs();
        let v: Vec<f64> = x.iter().map(|&x| quartic(x)).collect();
        let r = linecut_errorbar(&x, &v).unwrap();
        assert!(r.residual_std < 1e-12);
        assert!((r.eval(0.93) - quartic(0.93)).abs() < 1e-12);
        assert_eq!(r.residuals.len(), 31);
    }

    #[test]
    fn planted_noise_is_recovered() {
        let x = xs();
        let noise = rand_distr::Normal::new(0.0, 0.0016).unwrap();
        let mut ok = 0;
        for seed in 0..100 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let v: Vec<f64> = x.iter().map(|&x| quartic(x) + noise.sample(&mut rng)).collect();
            let s = linecut_errorbar(&x, &v).unwrap().residual_std;
            ok += usize::from((s / 0.0016 - 1.0).abs() < 0.4);
        }
        assert!(ok >= 95, "{ok}");
    }

    #[test]
    fn adding_a_quartic_changes_nothing() {
        let x = xs();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let noise = rand_distr::Normal::new(0.0, 0.002).unwrap();
        let v: Vec<f64> = x.iter().map(|_| noise.sample(&mut rng)).collect();
        let w: Vec<f64> = x.iter().zip(&v).map(|(&x, e)| e + quartic(x)).collect();
        let a = linecut_errorbar(&x, &v).unwrap();
        let b = linecut_errorbar(&x, &w).unwrap();
        assert!((a.residual_std - b.residual_std).abs() < 1e-12);
    }

    #[test]
    fn blom_positions() {
        let q = blom_quantiles(3);
        assert!(q[1].abs() < 1e-12);
        assert!((q[0] + q[2]).abs() < 1e-12);
        // (1 − 3/8)/(3 + 1/4) = 0.1923 → −0.8694
        assert!((q[0] + 0.869_4).abs() < 1e-3);
    }

    #[test]
    fn short_cut_rejected() {
        assert!(matches!(linecut_errorbar_indexed(&[1.0; 7]), Err(Error::InvalidArgument(_))));
    }
}
