//! Event-level simulation of the heralded-absorption experiments, event-file I/O
//! and tabulation.

pub mod binning;
pub mod budget;
pub mod config;
pub mod events;
pub mod gate;
pub mod sim;

pub use binning::{larmor_bin, CellKey, CountsTable, Outcome, Setting};
pub use budget::{BudgetInputs, BudgetReport, SuccessProbabilities};
pub use config::{EfficiencyChain, Experiment, RunConfig, TeleportInput};
pub use events::{
    write_events, AtomicOutcome, EventMetadata, EventReader, EventRecord, ReadoutMode,
};
pub use gate::{coincidence_gate, estimate_accidental_fraction, gate_acceptance};
pub use sim::{
    exact_counts_table, expected_gated_counts, simulate_events, simulate_runs, Coincidence,
    ExpectedCounts, Models, SimulatedEvents,
};
