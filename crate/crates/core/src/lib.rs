//! Design and simulation of dynamically corrected gates for singlet-triplet
//! qubits.
//!
//! Frequencies are carried in MHz and times in ns throughout; the one place the
//! two meet is [`qcore::su2_evolve`].

pub mod analysis;
pub mod error;
pub mod fmt;
pub mod optim;
pub mod pulse;
pub mod qcore;
pub mod quadrature;
pub mod scqc;
pub mod sim;
pub mod tomo;

pub use error::{Error, Result};
