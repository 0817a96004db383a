use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `J(V) = J0·exp(V/V0)`, with the qubit's Zeeman gradient attached for convenience.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExchangeModel {
    /// MHz.
    pub j0: f64,
    /// mV.
    pub v0: f64,
    /// MHz.
    pub dez: f64,
}

impl ExchangeModel {
    pub fn new(j0: f64, v0: f64, dez: f64) -> Result<Self> {
        let m = Self { j0, v0, dez };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.j0 > 0.0) || !self.j0.is_finite() {
            return Err(Error::invalid(format!("J0 must be > 0, got {}", self.j0)));
        }
        if self.v0 == 0.0 || !self.v0.is_finite() {
            return Err(Error::invalid(format!("V0 must be finite and non-zero, got {}", self.v0)));
        }
        Ok(())
    }
}

/// `V0·ln(J/J0)` in mV.
pub fn voltage_from_exchange(j: f64, model: &ExchangeModel) -> Result<f64> {
    if !(j > 0.0) || !j.is_finite() {
        return Err(Error::invalid(format!("exchange must be > 0 for voltage conversion, got {j}")));
    }
    Ok(model.v0 * (j / model.j0).ln())
}

pub fn exchange_from_voltage(v: f64, model: &ExchangeModel) -> f64 {
    model.j0 * (v / model.v0).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model() -> ExchangeModel {
        ExchangeModel::new(0.35, 12.0, 2.9).unwrap()
    }

    #[test]
    fn reference_points() {
        let m = model();
        assert_eq!(voltage_from_exchange(m.j0, &m).unwrap(), 0.0);
        assert!((voltage_from_exchange(m.j0 * std::f64::consts::E, &m).unwrap() - m.v0).abs() < 1e-12);
        assert!(voltage_from_exchange(0.0, &m).is_err());
        assert!(voltage_from_exchange(-1.0, &m).is_err());
    }

    #[test]
    fn invalid_models() {
        assert!(ExchangeModel::new(0.0, 1.0, 1.0).is_err());
        assert!(ExchangeModel::new(1.0, 0.0, 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn round_trip(j in 0.01..100.0f64) {
            let m = model();
            let back = exchange_from_voltage(voltage_from_exchange(j, &m).unwrap(), &m);
            prop_assert!(((back - j) / j).abs() < 1e-10);
        }
    }
}
