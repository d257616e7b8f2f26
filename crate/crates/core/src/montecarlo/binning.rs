//! Tabulation of events by measurement setting, outcome and Larmor-phase bin.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::config::Experiment;
use super::events::{AtomicOutcome, EventRecord, ReadoutMode};
use crate::error::{Error, Result};
use crate::protocol::{Herald, Passage, PhotonBasis};

/// Everything the experimenter chose for an event; outcomes within a setting
/// and bin form a complete measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Setting {
    pub passage: Passage,
    /// Position in the experiment's input schedule.
    pub input: u16,
    pub basis: PhotonBasis,
    pub mode: ReadoutMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Outcome {
    pub herald: Herald,
    pub atomic: AtomicOutcome,
    pub click: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub setting: Setting,
    pub bin: u16,
    pub outcome: Outcome,
}

impl CellKey {
    pub fn group(&self) -> (Setting, u16) {
        (self.setting, self.bin)
    }
}

/// Phase bin `floor(φ / (2π/N))` of a phase given in milliradians.
pub fn phase_bin(phase_mrad: u32, n_bins: usize) -> u16 {
    let phase = phase_mrad as f64 * 1e-3;
    let bin = (phase * n_bins as f64 / TAU).floor() as usize;
    bin.min(n_bins - 1) as u16
}

/// `[lo, hi)` phase edges of a bin.
pub fn bin_edges(bin: u16, n_bins: usize) -> (f64, f64) {
    let w = TAU / n_bins as f64;
    (bin as f64 * w, (bin as f64 + 1.0) * w)
}

/// Non-negative weights per cell. Counts are real so that background-corrected
/// and exact-probability tables share the type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsTable {
    n_bins: usize,
    cells: BTreeMap<CellKey, f64>,
}

impl CountsTable {
    pub fn new(n_bins: usize) -> Result<Self> {
        if n_bins < 2 {
            return Err(Error::InvalidParameter {
                name: "larmor_bins",
                reason: format!("need at least 2 bins, got {n_bins}"),
            });
        }
        Ok(Self {
            n_bins,
            cells: BTreeMap::new(),
        })
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn add(&mut self, key: CellKey, weight: f64) {
        *self.cells.entry(key).or_insert(0.0) += weight;
    }

    pub fn get(&self, key: &CellKey) -> f64 {
        self.cells.get(key).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CellKey, &f64)> {
        self.cells.iter()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.cells.values().sum()
    }

    /// Totals per (setting, bin).
    pub fn group_totals(&self) -> BTreeMap<(Setting, u16), f64> {
        let mut out = BTreeMap::new();
        for (k, v) in &self.cells {
            *out.entry(k.group()).or_insert(0.0) += v;
        }
        out
    }

    /// Same table with every count replaced by `f(key, count)`.
    pub fn map(&self, mut f: impl FnMut(&CellKey, f64) -> f64) -> Self {
        Self {
            n_bins: self.n_bins,
            cells: self.cells.iter().map(|(k, &v)| (*k, f(k, v))).collect(),
        }
    }

    pub fn filter(&self, mut keep: impl FnMut(&CellKey) -> bool) -> Self {
        Self {
            n_bins: self.n_bins,
            cells: self
                .cells
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, &v)| (*k, v))
                .collect(),
        }
    }

    /// Adds one event under `experiment`'s input schedule.
    pub fn record(&mut self, event: &EventRecord, experiment: &Experiment) {
        let key = CellKey {
            setting: Setting {
                passage: event.passage,
                input: experiment.input_class(event.run_index) as u16,
                basis: event.basis,
                mode: event.atomic.mode(),
            },
            bin: phase_bin(event.phase_mrad, self.n_bins),
            outcome: Outcome {
                herald: event.herald,
                atomic: event.atomic,
                click: event.click,
            },
        };
        self.add(key, 1.0);
    }
}

/// Tabulates events into `n_bins` Larmor-phase bins.
pub fn larmor_bin<'a>(
    events: impl IntoIterator<Item = &'a EventRecord>,
    n_bins: usize,
    experiment: &Experiment,
) -> Result<CountsTable> {
    let mut table = CountsTable::new(n_bins)?;
    for e in events {
        table.record(e, experiment);
    }
    Ok(table)
}
