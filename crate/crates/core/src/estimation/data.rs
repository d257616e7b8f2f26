//! Measurement models: which operator each counts-table cell estimates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::binning::{bin_edges, CellKey, CountsTable, Outcome, Setting};
use crate::montecarlo::config::{Experiment, TeleportInput};
use crate::montecarlo::events::{AtomicOutcome, ReadoutMode};
use crate::protocol::{
    population_readout, superposition_readout, superposition_readout_binned, BellOutcome, Herald,
    Passage, Polarization,
};
use crate::qmath::{BellState, DensityMatrix, Operator, StateVector, Tensor, C64};

/// How the phase-bin structure enters the measurement model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelOptions {
    /// Model each bin by the phase average over its width rather than by its centre.
    pub correct_binning: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            correct_binning: true,
        }
    }
}

/// One cell of a state-tomography data set. Elements of a group sum to a
/// multiple of the identity; probabilities are normalized within the group.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMeasurement {
    pub element: Operator,
    pub count: f64,
    pub group: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateData {
    pub dim: usize,
    pub measurements: Vec<StateMeasurement>,
}

/// One cell of a process-tomography data set: a prepared input and an output element.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMeasurement {
    pub input: DensityMatrix,
    pub element: Operator,
    pub count: f64,
    pub group: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessData {
    pub measurements: Vec<ProcessMeasurement>,
}

impl StateData {
    pub fn total(&self) -> f64 {
        self.measurements.iter().map(|m| m.count).sum()
    }

    pub fn n_groups(&self) -> usize {
        self.measurements
            .iter()
            .map(|m| m.group + 1)
            .max()
            .unwrap_or(0)
    }
}

impl ProcessData {
    pub fn total(&self) -> f64 {
        self.measurements.iter().map(|m| m.count).sum()
    }
}

/// Operator on the herald-corrected S qubit estimated by an atomic outcome
/// observed in phase bin `bin`.
pub fn atomic_element(
    herald: Herald,
    atomic: AtomicOutcome,
    bin: u16,
    n_bins: usize,
    opts: ModelOptions,
) -> Operator {
    match atomic.projection() {
        None => population_readout(if atomic == AtomicOutcome::Shelved0 {
            0
        } else {
            1
        }),
        Some(p) => {
            // a V herald leaves σz on the S qubit, which swaps the equatorial outcomes
            let p = if herald == Herald::V { p.flipped() } else { p };
            let (lo, hi) = bin_edges(bin, n_bins);
            if opts.correct_binning {
                superposition_readout_binned(p, lo, hi)
            } else {
                superposition_readout(p, 0.5 * (lo + hi))
            }
        }
    }
}

fn outcomes_of(setting: &Setting, experiment: &Experiment) -> Vec<Outcome> {
    let clicks: Vec<u8> = match experiment {
        Experiment::Mapping { inputs } => vec![inputs[setting.input as usize].click()],
        _ => vec![0, 1],
    };
    let mut out = Vec::new();
    for herald in Herald::ALL {
        for atomic in AtomicOutcome::outcomes(setting.mode) {
            for &click in &clicks {
                out.push(Outcome {
                    herald,
                    atomic,
                    click,
                });
            }
        }
    }
    out
}

fn groups_of(counts: &CountsTable, passage: Passage) -> Vec<(Setting, u16)> {
    counts
        .group_totals()
        .into_keys()
        .filter(|(s, _)| s.passage == passage)
        .collect()
}

/// Photon-B ⊗ S-qubit data of an entanglement-transfer table for one passage.
pub fn transfer_state_data(
    counts: &CountsTable,
    passage: Passage,
    opts: ModelOptions,
) -> Result<StateData> {
    let experiment = Experiment::EntanglementTransfer;
    let mut measurements = Vec::new();
    for (g, (setting, bin)) in groups_of(counts, passage).into_iter().enumerate() {
        for outcome in outcomes_of(&setting, &experiment) {
            let key = CellKey {
                setting,
                bin,
                outcome,
            };
            let atom = atomic_element(outcome.herald, outcome.atomic, bin, counts.n_bins(), opts);
            measurements.push(StateMeasurement {
                element: setting.basis.projector(outcome.click).tensor(&atom),
                count: counts.get(&key),
                group: g,
            });
        }
    }
    if measurements.is_empty() {
        return Err(Error::MissingSetting(format!("no {passage}-passage data")));
    }
    Ok(StateData {
        dim: 4,
        measurements,
    })
}

/// Prepared D-qubit state of a teleportation input in a phase bin.
pub fn teleport_input_state(
    input: TeleportInput,
    bin: u16,
    n_bins: usize,
    opts: ModelOptions,
) -> DensityMatrix {
    match input {
        TeleportInput::Minus => DensityMatrix::from_pure(&StateVector::basis(2, 0)).expect("basis"),
        TeleportInput::Plus => DensityMatrix::from_pure(&StateVector::basis(2, 1)).expect("basis"),
        TeleportInput::Superposition => {
            let (lo, hi) = bin_edges(bin, n_bins);
            let centre = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            let shrink = if opts.correct_binning && half > 0.0 {
                half.sin() / half
            } else {
                1.0
            };
            let off = C64::from_polar(0.5 * shrink, -centre);
            let m = nalgebra::DMatrix::from_row_slice(
                2,
                2,
                &[C64::new(0.5, 0.0), off, off.conj(), C64::new(0.5, 0.0)],
            );
            DensityMatrix::new_unchecked(m)
        }
    }
}

/// Input-to-photon-B data of a teleportation table, conditioned on one Bell outcome.
pub fn teleport_process_data(
    counts: &CountsTable,
    inputs: &[TeleportInput],
    bell: BellState,
    opts: ModelOptions,
) -> Result<ProcessData> {
    let mut measurements = Vec::new();
    let mut group = 0;
    // each Bell state is heralded in exactly one passage
    let passage = BellOutcome::all()
        .find(|o| o.bell == bell)
        .map(|o| o.passage)
        .expect("every Bell state has an outcome");
    for (setting, bin) in groups_of(counts, passage) {
        let input = *inputs
            .get(setting.input as usize)
            .ok_or_else(|| Error::MissingSetting(format!("input {}", setting.input)))?;
        let rho = teleport_input_state(input, bin, counts.n_bins(), opts);
        for outcome in BellOutcome::all().filter(|o| o.bell == bell) {
            for click in 0..2u8 {
                let key = CellKey {
                    setting,
                    bin,
                    outcome: Outcome {
                        herald: outcome.herald,
                        atomic: AtomicOutcome::from_projection(outcome.atomic),
                        click,
                    },
                };
                measurements.push(ProcessMeasurement {
                    input: rho.clone(),
                    element: setting.basis.projector(click),
                    count: counts.get(&key),
                    group,
                });
            }
            group += 1;
        }
    }
    if measurements.is_empty() {
        return Err(Error::MissingSetting(format!("no data heralding {bell}")));
    }
    Ok(ProcessData { measurements })
}

/// Photon-polarization-to-S-qubit data of a state-mapping table.
pub fn mapping_process_data(
    counts: &CountsTable,
    inputs: &[Polarization],
    passage: Passage,
    opts: ModelOptions,
) -> Result<ProcessData> {
    let experiment = Experiment::Mapping {
        inputs: inputs.to_vec(),
    };
    let mut measurements = Vec::new();
    for (g, (setting, bin)) in groups_of(counts, passage).into_iter().enumerate() {
        let pol = *inputs
            .get(setting.input as usize)
            .ok_or_else(|| Error::MissingSetting(format!("input {}", setting.input)))?;
        let rho = DensityMatrix::from_pure(&pol.state())?;
        for outcome in outcomes_of(&setting, &experiment) {
            let key = CellKey {
                setting,
                bin,
                outcome,
            };
            measurements.push(ProcessMeasurement {
                input: rho.clone(),
                element: atomic_element(outcome.herald, outcome.atomic, bin, counts.n_bins(), opts),
                count: counts.get(&key),
                group: g,
            });
        }
    }
    if measurements.is_empty() {
        return Err(Error::MissingSetting(format!("no {passage}-passage data")));
    }
    Ok(ProcessData { measurements })
}

/// Per-bin fractions of the `+` superposition outcome (herald corrected) for
/// the events of each photon (basis, click), summed over the other settings.
pub(crate) fn superposition_fractions(
    counts: &CountsTable,
    passage: Passage,
) -> BTreeMap<(crate::protocol::PhotonBasis, u8), Vec<f64>> {
    let n = counts.n_bins();
    let mut plus: BTreeMap<_, Vec<f64>> = BTreeMap::new();
    let mut all: BTreeMap<_, Vec<f64>> = BTreeMap::new();
    for (k, &v) in counts.iter() {
        if k.setting.passage != passage || k.setting.mode != ReadoutMode::Superposition {
            continue;
        }
        let id = (k.setting.basis, k.outcome.click);
        let is_plus = (k.outcome.atomic == AtomicOutcome::Plus) == (k.outcome.herald == Herald::H);
        all.entry(id).or_insert_with(|| vec![0.0; n])[k.bin as usize] += v;
        let p = plus.entry(id).or_insert_with(|| vec![0.0; n]);
        if is_plus {
            p[k.bin as usize] += v;
        }
    }
    all.into_iter()
        .map(|(id, tot)| {
            let p = &plus[&id];
            let frac = tot
                .iter()
                .zip(p)
                .map(|(&t, &q)| if t > 0.0 { q / t } else { f64::NAN })
                .collect();
            (id, frac)
        })
        .collect()
}
