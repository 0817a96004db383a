//! Quasistatic-noise Monte Carlo: noise draws, propagation of (possibly
//! distorted) pulses, channel averaging, parameter sweeps and the noise
//! decomposition table.

mod engine;
mod noise;
mod sweep;
mod table;

pub use engine::{evolve_waveform, ideal_unitary, monte_carlo, monte_carlo_channel, Distortion, Execution, McOutcome};
pub use noise::{dephasing_time, sample_noise, NoiseConfig, NoiseSpec};
pub use sweep::{sweep_corrected, sweep_uncorrected, FidelityGrid, GridPoint, SweepAxis, SweepKind, SweepSpec};
pub use table::{table1, CalibrationBox, GateRow, Table1, Table1Config, Table1Row, TableCell};

pub(crate) use engine::{run_program, Program};
