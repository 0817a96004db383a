//! Curve fitting and uncertainty estimates: Ramsey traces, the exchange
//! model, quartic line-cut error bars and repeated-seed fidelity scatter.

mod exchange;
mod linecut;
mod ramsey;
mod scatter;

pub use exchange::{fit_exchange_model, qubit_frequency, simulate_exchange_points, ExchangeFit, EXCHANGE_CONDITION_LIMIT};
pub use linecut::{blom_quantiles, linecut_errorbar, linecut_errorbar_indexed, UncertaintyReport};
pub use ramsey::{fit_ramsey, simulate_ramsey, RamseyEnvelope, RamseyFit, RamseySeries};
pub use scatter::{fidelity_scatter, loglog_slope, ScatterStats};
