//! Tomography, fringe fitting, background correction, rotation estimation and
//! the detection-window scan.

pub mod background;
pub mod bootstrap;
pub mod data;
pub mod fringe;
mod linalg;
pub mod process_tomo;
pub mod rotation;
pub mod scan;
pub mod state_tomo;

pub use background::background_correct;
pub use bootstrap::{bootstrap, resample, BootstrapSummary};
pub use data::{
    mapping_process_data, teleport_process_data, transfer_state_data, ModelOptions, ProcessData,
    ProcessMeasurement, StateData, StateMeasurement,
};
pub use fringe::{binning_attenuation, fit_fringe, superposition_fringes, FringeFit};
pub use linalg::pauli_basis;
pub use process_tomo::{
    linear_process_fit, mean_overlap_fidelity, ml_process_reconstruct, ProcessEstimate,
    ProcessMatrix,
};
pub use rotation::{estimate_polarization_rotation, RotationEstimate};
pub use scan::{detection_window_scan, ScanOptions, ScanPoint, WindowScan};
pub use state_tomo::{
    conditioned_expectations, linear_state_fit, linear_state_reconstruct, ml_state_reconstruct,
    pauli_expectations, state_metrics, transfer_target, LinearEstimate, MlEstimate, MlOptions,
    StateMetrics,
};
