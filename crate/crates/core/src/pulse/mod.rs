//! Pulse sequences, rasterization, the exchange/voltage map and the distortion
//! models (kernel pipeline and broken-gate circuit).

mod circuit;
mod exchange;
mod filter;
mod sequence;
mod waveform;

pub use circuit::{circuit_response, compare_distortion_models, CircuitModel, DistortionComparison};
pub use exchange::{exchange_from_voltage, voltage_from_exchange, ExchangeModel};
pub use filter::{
    apply_distortion, apply_lowpass, distort_exchange, distort_exchange_with_floor, exchange_to_voltage,
    voltage_to_exchange, FilterSpec, DEFAULT_EXCHANGE_FLOOR,
};
pub use sequence::{hadamard_time, scale_pulse, PulseSequence, Segment, SegmentRole};
pub use waveform::{rasterize, Waveform, WaveformKind};
