//! Process tomography by constrained direct inversion.

use nalgebra::{DMatrix, Matrix4, Vector3};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::povm::{reconstruct_from_probabilities, reconstruct_state, Axis, AxisCounts, PovmSet};
use crate::error::{Error, Result};
use crate::qcore::{process_fidelity, project_cptp, DensityMatrix2, QuantumChannel};

/// Inputs whose smallest singular value falls below this fraction of the
/// largest are treated as not spanning the operator space.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessEstimate {
    /// Unit-trace chi matrix in the `{I, σx, σy, σz}` basis.
    pub chi: Matrix4<C64>,
    pub channel: QuantumChannel,
    pub fidelity: f64,
    /// Frobenius distance between the raw and projected Choi matrices.
    pub cptp_residual: f64,
    /// Condition number of the stacked input states.
    pub condition_number: f64,
}

/// JSON-friendly view of a [`ProcessEstimate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessExport {
    pub chi_re: [[f64; 4]; 4],
    pub chi_im: [[f64; 4]; 4],
    pub fidelity: f64,
    pub cptp_residual: f64,
    pub condition_number: f64,
}

impl ProcessEstimate {
    pub fn export(&self) -> ProcessExport {
        let mut chi_re = [[0.0; 4]; 4];
        let mut chi_im = [[0.0; 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                chi_re[r][c] = self.chi[(r, c)].re;
                chi_im[r][c] = self.chi[(r, c)].im;
            }
        }
        ProcessExport {
            chi_re,
            chi_im,
            fidelity: self.fidelity,
            cptp_residual: self.cptp_residual,
            condition_number: self.condition_number,
        }
    }
}

/// `|0⟩, |1⟩, |+x⟩, |+y⟩`.
pub fn default_input_states() -> Vec<(String, DensityMatrix2)> {
    [("0", [0.0, 0.0, 1.0]), ("1", [0.0, 0.0, -1.0]), ("+x", [1.0, 0.0, 0.0]), ("+y", [0.0, 1.0, 0.0])]
        .into_iter()
        .map(|(l, b)| (l.to_string(), DensityMatrix2::from_bloch(Vector3::from(b)).expect("pure state")))
        .collect()
}

fn vec_columns(states: &[DensityMatrix2]) -> DMatrix<C64> {
    DMatrix::from_fn(4, states.len(), |r, c| states[c].matrix()[(r % 2, r / 2)])
}

/// Least-squares superoperator mapping `inputs` to `outputs`, projected onto
/// the nearest CPTP map, compared against `target`.
pub fn process_tomography(
    inputs: &[DensityMatrix2],
    outputs: &[DensityMatrix2],
    target: &QuantumChannel,
) -> Result<ProcessEstimate> {
    if inputs.len() != outputs.len() {
        return Err(Error::invalid(format!("{} inputs but {} outputs", inputs.len(), outputs.len())));
    }
    if inputs.len() < 4 {
        return Err(Error::invalid(format!("process tomography needs at least 4 input states, got {}", inputs.len())));
    }
    let x = vec_columns(inputs);
    let y = vec_columns(outputs);
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > RANK_TOL * smax) {
        return Err(Error::invalid(format!(
            "input states do not span the operator space (singular values {smin:.3e} / {smax:.3e})"
        )));
    }
    let pinv = svd.pseudo_inverse(RANK_TOL * smax).map_err(|e| Error::invalid(e.to_string()))?;
    let s = &y * pinv;
    let raw = QuantumChannel::from_superoperator(Matrix4::from_fn(|r, c| s[(r, c)]));
    let channel = project_cptp(&raw)?;
    let chi = channel.chi();
    Ok(ProcessEstimate {
        chi,
        channel,
        fidelity: process_fidelity(&channel, target)?,
        cptp_residual: (raw.choi() - channel.choi()).norm(),
        condition_number: smax / smin,
    })
}

/// How output states are measured when tomographing a known channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Readout {
    /// Exact POVM probabilities.
    Exact,
    /// Binomial counts per axis; cell `k` uses stream `k` of `seed`.
    Shots { shots: u64, seed: u64 },
}

/// Full simulated pipeline on the default inputs: apply `channel`, measure
/// with `povm`, reconstruct each output, then invert for the process.
pub fn tomography_of_channel(
    channel: &QuantumChannel,
    povm: &PovmSet,
    readout: Readout,
    target: &QuantumChannel,
) -> Result<ProcessEstimate> {
    let inputs: Vec<DensityMatrix2> = default_input_states().into_iter().map(|(_, s)| s).collect();
    let mut outputs = Vec::with_capacity(inputs.len());
    for (k, rho) in inputs.iter().enumerate() {
        let out = DensityMatrix2::new(channel.apply_state(rho))?;
        let est = match readout {
            Readout::Exact => reconstruct_from_probabilities(povm.probabilities(&out), povm)?,
            Readout::Shots { shots, seed } => {
                if shots == 0 {
                    return Err(Error::invalid("shots must be ≥ 1"));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                let counts: Result<Vec<AxisCounts>> = Axis::ALL
                    .iter()
                    .map(|&a| {
                        let p = povm.probability(&out, a).clamp(0.0, 1.0);
                        let b = Binomial::new(shots, p).map_err(|e| Error::invalid(e.to_string()))?;
                        Ok(AxisCounts { axis: a, shots, successes: b.sample(&mut rng) })
                    })
                    .collect();
                reconstruct_state(&counts?, povm)?
            }
        };
        outputs.push(est);
    }
    process_tomography(&inputs, &outputs, target)
}
