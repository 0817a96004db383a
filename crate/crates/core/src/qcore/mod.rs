//! Exact two-level quantum mechanics: unitaries, states, channels and the
//! physicality projections used by the simulators and the tomography path.

mod channel;
mod density;
pub mod pauli;
mod unitary;

pub use channel::{
    average_channels, process_fidelity, project_cptp, project_cptp_with, ProjectionOptions, QuantumChannel,
    CPTP_TOL,
};
pub use density::{mle_density, DensityMatrix2};
pub use pauli::PauliVector;
pub use unitary::{conjugate_pauli, su2_evolve, Unitary2, MHZ_NS};

pub(crate) use density::bloch_matrix;
pub(crate) use unitary::evolve_unchecked;
