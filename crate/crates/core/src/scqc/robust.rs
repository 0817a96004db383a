use crate::error::{Error, Result};
use crate::sim::{run_program, Execution, NoiseSpec, Program};
use crate::pulse::PulseSequence;
use crate::qcore::Unitary2;
use crate::quadrature::gauss_hermite;

/// Default Gauss-Hermite order per noise axis.
pub const DEFAULT_QUADRATURE_ORDER: usize = 16;

/// `E[|Tr(U_target† U)|²/4]` over quasistatic Gaussian noise: an additive
/// Zeeman shift with standard deviation `sigma_dez` (MHz) and a multiplicative
/// exchange factor `1 + ε` with `ε` of standard deviation `sigma_j_rel`. Exact
/// segment durations, no distortion. Deterministic (quadrature, not sampling).
pub fn expected_fidelity(pulse: &PulseSequence, target: &Unitary2, sigma_dez: f64, sigma_j_rel: f64, order: usize) -> f64 {
    let axis = |sigma: f64| if sigma > 0.0 { gauss_hermite(order.max(1)) } else { vec![(0.0, 1.0)] };
    let hf = axis(sigma_dez);
    let jn = axis(sigma_j_rel);
    let mut acc = 0.0;
    for &(x, wx) in &hf {
        for &(y, wy) in &jn {
            let u = pulse.unitary_with(1.0 + sigma_j_rel * y, sigma_dez * x);
            acc += wx * wy * target.overlap_fidelity(&u);
        }
    }
    acc.clamp(0.0, 1.0)
}

pub fn expected_infidelity(pulse: &PulseSequence, target: &Unitary2, sigma_dez: f64, sigma_j_rel: f64) -> f64 {
    1.0 - expected_fidelity(pulse, target, sigma_dez, sigma_j_rel, DEFAULT_QUADRATURE_ORDER)
}

/// Monte Carlo infidelity under hyperfine noise alone (exact timing, no
/// distortion) for each σ in `sigmas` (MHz). The same standard-normal draws
/// are rescaled for every σ.
pub fn infidelity_vs_sigma(
    pulse: &PulseSequence,
    target: &Unitary2,
    sigmas: &[f64],
    realizations: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let program = Program::compile(pulse, &Execution::Exact)?;
    sigmas
        .iter()
        .map(|&s| {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::invalid(format!("σ must be > 0, got {s}")));
            }
            let noise = NoiseSpec::hyperfine_only(s, realizations, seed);
            let out = run_program(&program, pulse.dez(), &noise, target)?;
            let n = out.realization_fidelities.len() as f64;
            Ok((s, out.realization_fidelities.iter().map(|f| 1.0 - f).sum::<f64>() / n))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scqc::{design_identity, IdentityDesignOptions};

    fn slope(points: &[(f64, f64)]) -> f64 {
        let xy: Vec<(f64, f64)> = points.iter().map(|&(s, i)| (s.ln(), i.ln())).collect();
        let n = xy.len() as f64;
        let (mx, my) = (xy.iter().map(|p| p.0).sum::<f64>() / n, xy.iter().map(|p| p.1).sum::<f64>() / n);
        let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }

    fn sigmas(dez: f64) -> Vec<f64> {
        (0..5).map(|i| dez * 0.01 * 5f64.powf(i as f64 / 4.0)).collect()
    }

    #[test]
    fn uncorrected_identity_is_quadratic() {
        let p = PulseSequence::uncorrected_identity(2.9, 1.0, 1.0).unwrap();
        let c = infidelity_vs_sigma(&p, &Unitary2::identity(), &sigmas(2.9), 512, 1).unwrap();
        let k = slope(&c);
        assert!((k - 2.0).abs() < 0.1, "slope {k}");
    }

    #[test]
    fn corrected_identity_is_quartic() {
        // The rounded reference times leave a ~1e-4 noiseless floor; the
        // exact design does not.
        let d = design_identity(2.9, &IdentityDesignOptions::default()).unwrap();
        let p = d.params.to_pulse().unwrap();
        let c = infidelity_vs_sigma(&p, &Unitary2::identity(), &sigmas(2.9), 512, 1).unwrap();
        let k = slope(&c);
        assert!((k - 4.0).abs() < 0.3, "slope {k}");
    }

    #[test]
    fn vanishing_noise_vanishing_error() {
        let p = PulseSequence::uncorrected_identity(2.9, 1.0, 1.0).unwrap();
        let c = infidelity_vs_sigma(&p, &Unitary2::identity(), &[1e-6], 64, 2).unwrap();
        assert!(c[0].1 < 1e-9);
        assert!(infidelity_vs_sigma(&p, &Unitary2::identity(), &[0.0], 64, 2).is_err());
    }

    #[test]
    fn quadrature_agrees_with_sampling() {
        let p = PulseSequence::uncorrected_identity(2.9, 1.0, 1.0).unwrap();
        let q = expected_infidelity(&p, &Unitary2::identity(), 0.2867, 0.0);
        let m = infidelity_vs_sigma(&p, &Unitary2::identity(), &[0.2867], 4096, 3).unwrap()[0].1;
        assert!((q - m).abs() < 0.1 * q, "{q} vs {m}");
    }
}
