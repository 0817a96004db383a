//! Simulated tomography: POVM sampling, state reconstruction, POVM
//! self-calibration and process estimation.

mod calibrate;
mod dataset;
mod povm;
mod process;

pub use calibrate::{calibrate_povm, purity_oscillation, DecayModel, Envelope, PovmCalibration, SeriesDecay};
pub use dataset::{
    ensemble_state, simulate_dataset, DatasetSpec, PreparedState, Series, SeriesPoint, TomographyDataset,
    TomographyRecord,
};
pub use povm::{
    reconstruct_from_probabilities, reconstruct_state, simulate_measurement, Axis, AxisCounts, AxisPovm, PovmSet,
};
pub use process::{
    default_input_states, process_tomography, tomography_of_channel, ProcessEstimate, ProcessExport, Readout,
};
