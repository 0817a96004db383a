use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Vector3};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{bloch_matrix, mle_density, pauli, DensityMatrix2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "x")]
    X,
    #[serde(rename = "y")]
    Y,
    #[serde(rename = "z")]
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    fn pauli(self) -> Matrix2<C64> {
        match self {
            Axis::X => pauli::sigma_x(),
            Axis::Y => pauli::sigma_y(),
            Axis::Z => pauli::sigma_z(),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::invalid(format!("unknown measurement axis '{other}'"))),
        }
    }
}

/// One binary measurement: `E₊ = ((1 + offset) I + visibility σ_a)/2`, `E₋ = I − E₊`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisPovm {
    pub visibility: f64,
    pub offset: f64,
}

impl AxisPovm {
    pub const IDEAL: AxisPovm = AxisPovm { visibility: 1.0, offset: 0.0 };
}

/// Binary POVMs along x, y and z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PovmSet {
    axes: [AxisPovm; 3],
}

impl PovmSet {
    /// Both elements are PSD iff `|offset| + |visibility| ≤ 1`.
    pub fn new(x: AxisPovm, y: AxisPovm, z: AxisPovm) -> Result<Self> {
        for (a, p) in Axis::ALL.iter().zip([x, y, z]) {
            if !p.visibility.is_finite() || !p.offset.is_finite() {
                return Err(Error::invalid(format!("{a} POVM parameters must be finite")));
            }
            if p.offset.abs() + p.visibility.abs() > 1.0 + 1e-10 {
                return Err(Error::invalid(format!(
                    "{a} POVM is not positive (visibility {}, offset {})",
                    p.visibility, p.offset
                )));
            }
        }
        Ok(Self { axes: [x, y, z] })
    }

    pub fn ideal() -> Self {
        Self { axes: [AxisPovm::IDEAL; 3] }
    }

    pub fn with_axis(&self, axis: Axis, p: AxisPovm) -> Result<Self> {
        let mut a = self.axes;
        a[axis.index()] = p;
        Self::new(a[0], a[1], a[2])
    }

    pub fn axis(&self, axis: Axis) -> AxisPovm {
        self.axes[axis.index()]
    }

    /// `(E₊, E₋)`.
    pub fn elements(&self, axis: Axis) -> (Matrix2<C64>, Matrix2<C64>) {
        let p = self.axis(axis);
        let plus = (pauli::identity() * C64::from(1.0 + p.offset) + axis.pauli() * C64::from(p.visibility)) * C64::from(0.5);
        (plus, pauli::identity() - plus)
    }

    /// `Tr(E₊ ρ)`.
    pub fn probability(&self, rho: &DensityMatrix2, axis: Axis) -> f64 {
        let p = self.axis(axis);
        0.5 * (1.0 + p.offset + p.visibility * rho.bloch()[axis.index()])
    }

    /// `[Tr(E₊ ρ)]` for x, y, z.
    pub fn probabilities(&self, rho: &DensityMatrix2) -> [f64; 3] {
        Axis::ALL.map(|a| self.probability(rho, a))
    }

    /// Inverts the forward model: Bloch components from success probabilities.
    pub fn invert(&self, probs: [f64; 3]) -> Result<Vector3<f64>> {
        let mut r = Vector3::zeros();
        for a in Axis::ALL {
            let p = self.axis(a);
            if p.visibility.abs() < 1e-9 {
                return Err(Error::Calibration(format!("{a} measurement has zero visibility; inversion is singular")));
            }
            r[a.index()] = (2.0 * probs[a.index()] - 1.0 - p.offset) / p.visibility;
        }
        Ok(r)
    }
}

/// Number of `E₊` outcomes in `shots` projective repetitions.
pub fn simulate_measurement(rho: &DensityMatrix2, povm: &PovmSet, axis: Axis, shots: u64, seed: u64) -> Result<u64> {
    if shots == 0 {
        return Err(Error::invalid("at least one shot is required"));
    }
    let p = povm.probability(rho, axis).clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = Binomial::new(shots, p).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(b.sample(&mut rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisCounts {
    pub axis: Axis,
    pub shots: u64,
    pub successes: u64,
}

/// Pooled success frequency per axis; every axis must be present.
pub(crate) fn frequencies(counts: &[AxisCounts]) -> Result<[f64; 3]> {
    let mut shots = [0u64; 3];
    let mut hits = [0u64; 3];
    for c in counts {
        if c.successes > c.shots {
            return Err(Error::invalid(format!("{} successes exceed {} shots", c.successes, c.shots)));
        }
        shots[c.axis.index()] += c.shots;
        hits[c.axis.index()] += c.successes;
    }
    if let Some(a) = Axis::ALL.iter().find(|a| shots[a.index()] == 0) {
        return Err(Error::invalid(format!("no counts on the {a} axis; three axes are required")));
    }
    Ok([0, 1, 2].map(|i| hits[i] as f64 / shots[i] as f64))
}

/// Linear inversion of the Bloch vector followed by projection onto the
/// Bloch ball.
pub fn reconstruct_state(counts: &[AxisCounts], povm: &PovmSet) -> Result<DensityMatrix2> {
    reconstruct_from_probabilities(frequencies(counts)?, povm)
}

pub fn reconstruct_from_probabilities(probs: [f64; 3], povm: &PovmSet) -> Result<DensityMatrix2> {
    let r = povm.invert(probs)?;
    mle_density(&bloch_matrix(r))
}
