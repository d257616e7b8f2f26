//! Fidelity against the position of a detection window within the exposure.

use serde::{Deserialize, Serialize};

use super::background::background_correct;
use super::data::{transfer_state_data, ModelOptions};
use super::state_tomo::{ml_state_reconstruct, state_metrics, transfer_target, MlOptions};
use crate::error::{Error, Result};
use crate::montecarlo::binning::larmor_bin;
use crate::montecarlo::config::Experiment;
use crate::montecarlo::events::EventRecord;
use crate::noise::linear_slope;
use crate::protocol::Passage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub window_s: f64,
    pub offsets_s: Vec<f64>,
    pub n_bins: usize,
    pub passage: Passage,
    pub model: ModelOptions,
    pub ml: MlOptions,
    /// Accidental fraction subtracted before each reconstruction.
    pub accidental_fraction: Option<f64>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            window_s: 50e-6,
            offsets_s: (0..7).map(|k| k as f64 * 50e-6).collect(),
            n_bins: 12,
            passage: Passage::First,
            model: ModelOptions::default(),
            ml: MlOptions::default(),
            accidental_fraction: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub offset_s: f64,
    pub fidelity: f64,
    pub events: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowScan {
    pub points: Vec<ScanPoint>,
    /// Least-squares fidelity change per second of offset.
    pub slope: f64,
}

impl WindowScan {
    pub fn is_non_increasing(&self) -> bool {
        self.points
            .windows(2)
            .all(|w| w[1].fidelity <= w[0].fidelity)
    }
}

/// Entanglement-transfer fidelity from the events heralded within
/// `[offset, offset + window)` of each run, for each offset.
pub fn detection_window_scan(events: &[EventRecord], opts: &ScanOptions) -> Result<WindowScan> {
    if opts.offsets_s.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "offsets",
            reason: "a scan needs at least two window offsets".into(),
        });
    }
    let experiment = Experiment::EntanglementTransfer;
    let mut points = Vec::with_capacity(opts.offsets_s.len());
    for &offset in &opts.offsets_s {
        let selected: Vec<&EventRecord> = events
            .iter()
            .filter(|e| {
                let t = e.herald_time_s();
                e.passage == opts.passage && t >= offset && t < offset + opts.window_s
            })
            .collect();
        if selected.is_empty() {
            return Err(Error::EmptyWindow { offset_s: offset });
        }
        let mut table = larmor_bin(selected.iter().copied(), opts.n_bins, &experiment)?;
        if let Some(f) = opts.accidental_fraction {
            table = background_correct(&table, f, &experiment);
        }
        let data = transfer_state_data(&table, opts.passage, opts.model)?;
        let est = ml_state_reconstruct(&data, opts.ml)?;
        points.push(ScanPoint {
            offset_s: offset,
            fidelity: state_metrics(&est.state, transfer_target(opts.passage))?.fidelity,
            events: selected.len(),
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.offset_s).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.fidelity).collect();
    Ok(WindowScan {
        slope: linear_slope(&xs, &ys),
        points,
    })
}
