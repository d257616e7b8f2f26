//! Simulation and analysis of a single-ion heralded-absorption Bell-state
//! measurement between a photonic polarization qubit and an atomic Zeeman qubit.

// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimation;
pub mod montecarlo;
pub mod noise;
pub mod protocol;
pub mod qmath;

pub use error::{Error, Result};
pub use protocol::{
    AtomicProjection, BellOutcome, Herald, LarmorConfig, Passage, PhotonBasis, Polarization,
};
pub use qmath::{
    bell_state, fidelity, partial_trace, pauli, purity, BellState, DensityMatrix, Operator, Pauli,
    StateVector, Subsystem, Tensor,
};
