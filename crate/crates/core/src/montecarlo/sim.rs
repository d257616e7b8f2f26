//! Event-level Monte Carlo of heralded-absorption runs.
//!
//! Each chunk of `runs_per_chunk` consecutive runs draws from its own ChaCha8
//! stream (`seed`, stream = chunk index), so the merged output does not depend
//! on how chunks are scheduled across threads.
//!
//! Per chunk, input class and passage, the numbers of signal, accidental and
//! dark coincidences are Poisson draws whose means follow from the efficiency
//! chain; each coincidence is then assigned a run, a herald time, a
//! herald/partner delay and measurement outcomes. Signal outcomes follow the Born
//! rule for the protocol operators applied to the source state; background
//! outcomes are white.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binning::{bin_edges, CellKey, CountsTable, Outcome, Setting};
use super::config::{EfficiencyChain, Experiment, RunConfig, TeleportInput};
use super::events::{AtomicOutcome, EventRecord, ReadoutMode};
use super::gate::{coincidence_gate, estimate_accidental_fraction};
use crate::error::{Error, Result};
use crate::noise::{
    source_density_matrix, BackgroundModel, DephasingModel, GapCalibration, SourceModel,
};
use crate::protocol::{
    bell_kraus, event_phase, ground_projector, herald_kraus, insert_atom, population_readout,
    BellOutcome, Herald, LarmorConfig, Passage, PhotonBasis,
};
use crate::qmath::{c, Operator, Tensor, C64, ONE, ZERO};

/// Physical models feeding a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Models {
    pub source: SourceModel,
    pub dephasing: DephasingModel,
    pub background: BackgroundModel,
    pub chain: EfficiencyChain,
    pub larmor: LarmorConfig,
}

impl Models {
    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.dephasing.validate()?;
        self.background.validate()?;
        self.chain.validate()?;
        self.larmor.validate()
    }

    /// Default models with background and dephasing fitted to `calibration`.
    pub fn calibrated(calibration: &GapCalibration) -> Result<Self> {
        let source = SourceModel::default();
        Ok(Self {
            dephasing: calibration.dephasing(source.werner_weight)?,
            background: calibration.background()?,
            source,
            ..Default::default()
        })
    }
}

/// A candidate coincidence before gating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coincidence {
    pub event: EventRecord,
    /// Partner detection time minus herald time.
    pub delay_s: f64,
}

/// Readout element of the S qubit in the frame of the fixed RF reference.
pub fn atomic_element(outcome: AtomicOutcome) -> Operator {
    match outcome {
        AtomicOutcome::Shelved0 => population_readout(0),
        AtomicOutcome::Shelved1 => population_readout(1),
        other => ground_projector(other.projection().expect("superposition outcome")),
    }
}

/// Outcome probability `a + c·Re(e^{−iφ} b)` for D-qubit coherence `c` and Larmor phase `φ`.
#[derive(Debug, Clone, Copy)]
struct Branch {
    outcome: Outcome,
    a: f64,
    b: C64,
}

#[derive(Debug, Clone)]
struct SettingTable {
    basis: PhotonBasis,
    mode: ReadoutMode,
    branches: Vec<Branch>,
}

impl SettingTable {
    fn sample<R: Rng>(&self, coherence: f64, phase: f64, rng: &mut R) -> Outcome {
        let rot = C64::from_polar(coherence, -phase);
        let probs: Vec<f64> = self
            .branches
            .iter()
            .map(|br| (br.a + (rot * br.b).re).max(0.0))
            .collect();
        let total: f64 = probs.iter().sum();
        let mut u = rng.random::<f64>() * total;
        for (br, p) in self.branches.iter().zip(&probs) {
            if u < *p {
                return br.outcome;
            }
            u -= p;
        }
        self.branches.last().expect("non-empty setting").outcome
    }

    fn sample_white<R: Rng>(&self, rng: &mut R) -> Outcome {
        self.branches[rng.random_range(0..self.branches.len())].outcome
    }
}

/// Born-rule tables of one input class.
#[derive(Debug, Clone)]
struct ClassModel {
    /// `tr(R_p ρ R_p†)` per passage.
    overlap: [f64; 2],
    /// Settings per passage, chosen uniformly per event.
    settings: [Vec<SettingTable>; 2],
}

fn passage_index(p: Passage) -> usize {
    match p {
        Passage::First => 0,
        Passage::Second => 1,
    }
}

fn trace_product(e: &Operator, m: &DMatrix<C64>) -> C64 {
    (e.matrix() * m).trace()
}

fn sandwich(k: &Operator, m: &DMatrix<C64>) -> DMatrix<C64> {
    k.matrix() * m * k.matrix().adjoint()
}

fn class_model(experiment: &Experiment, class: usize, source: &DMatrix<C64>) -> ClassModel {
    let half_identity = DMatrix::from_fn(2, 2, |i, j| if i == j { c(0.5, 0.0) } else { ZERO });
    let coherence_op = DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
    let zero_op = DMatrix::from_element(2, 2, ZERO);

    // (diagonal part of the D state, operator multiplying c·e^{−iφ}/2 + h.c.)
    let (d0, d1) = match experiment {
        Experiment::Teleportation { inputs } => match inputs[class] {
            TeleportInput::Superposition => (half_identity.clone(), coherence_op.clone()),
            TeleportInput::Minus => (
                DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]),
                zero_op.clone(),
            ),
            TeleportInput::Plus => (
                DMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, ONE]),
                zero_op.clone(),
            ),
        },
        _ => (half_identity.clone(), coherence_op.clone()),
    };

    let mapping_input = match experiment {
        Experiment::Mapping { inputs } => Some(inputs[class]),
        _ => None,
    };
    let joint = |y: &DMatrix<C64>| -> DMatrix<C64> {
        match mapping_input {
            Some(pol) => pol.state().projector().matrix().kronecker(y),
            None => insert_atom(source, y),
        }
    };
    let (j0, j1) = (joint(&d0), joint(&d1));

    let mut overlap = [0.0; 2];
    let mut settings: [Vec<SettingTable>; 2] = [Vec::new(), Vec::new()];
    for passage in Passage::ALL {
        let pi = passage_index(passage);
        match experiment {
            Experiment::Teleportation { .. } => {
                let kraus: Vec<(BellOutcome, Operator)> = BellOutcome::all()
                    .filter(|o| o.passage == passage)
                    .map(|o| (o, bell_kraus(&o, 2)))
                    .collect();
                overlap[pi] = kraus.iter().map(|(_, k)| sandwich(k, &j0).trace().re).sum();
                for basis in PhotonBasis::ALL {
                    let mut branches = Vec::new();
                    for (o, k) in &kraus {
                        let (m0, m1) = (sandwich(k, &j0), sandwich(k, &j1));
                        for click in 0..2u8 {
                            let e = basis.projector(click);
                            branches.push(Branch {
                                outcome: Outcome {
                                    herald: o.herald,
                                    atomic: AtomicOutcome::from_projection(o.atomic),
                                    click,
                                },
                                a: trace_product(&e, &m0).re,
                                b: trace_product(&e, &m1),
                            });
                        }
                    }
                    settings[pi].push(SettingTable {
                        basis,
                        mode: ReadoutMode::Superposition,
                        branches,
                    });
                }
            }
            Experiment::EntanglementTransfer | Experiment::Mapping { .. } => {
                let rest = if mapping_input.is_some() { 1 } else { 2 };
                let heralded: Vec<(Herald, DMatrix<C64>, DMatrix<C64>)> = Herald::ALL
                    .into_iter()
                    .map(|h| {
                        let k = herald_kraus(passage, h, rest);
                        (h, sandwich(&k, &j0), sandwich(&k, &j1))
                    })
                    .collect();
                overlap[pi] = heralded.iter().map(|(_, m0, _)| m0.trace().re).sum();
                let bases: Vec<PhotonBasis> = match mapping_input {
                    Some(pol) => vec![pol.basis()],
                    None => PhotonBasis::ALL.to_vec(),
                };
                for basis in bases {
                    for mode in ReadoutMode::ALL {
                        let mut branches = Vec::new();
                        for (h, m0, m1) in &heralded {
                            for atomic in AtomicOutcome::outcomes(mode) {
                                let a_el = atomic_element(atomic);
                                let clicks: Vec<u8> = match mapping_input {
                                    Some(pol) => vec![pol.click()],
                                    None => vec![0, 1],
                                };
                                for click in clicks {
                                    let e = match mapping_input {
                                        Some(_) => a_el.clone(),
                                        None => a_el.tensor(&basis.projector(click)),
                                    };
                                    branches.push(Branch {
                                        outcome: Outcome {
                                            herald: *h,
                                            atomic,
                                            click,
                                        },
                                        a: trace_product(&e, m0).re,
                                        b: trace_product(&e, m1),
                                    });
                                }
                            }
                        }
                        settings[pi].push(SettingTable {
                            basis,
                            mode,
                            branches,
                        });
                    }
                }
            }
        }
    }
    ClassModel { overlap, settings }
}

/// Precomputed quantities shared by all chunks.
struct Context<'a> {
    cfg: &'a RunConfig,
    models: &'a Models,
    classes: Vec<ClassModel>,
    n_classes: u64,
    pairs_per_run: f64,
    /// `η_854,A · η_854,B · η_393 · emission · raw absorption` per passage.
    registered_per_pair: [f64; 2],
    /// In-gate dark coincidences per run and passage.
    dark_per_run: [f64; 2],
    wavepacket: Exp<f64>,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a RunConfig, models: &'a Models, experiment: &Experiment) -> Result<Self> {
        cfg.validate()?;
        models.validate()?;
        experiment.validate()?;
        let source = source_density_matrix(&models.source)?;
        let classes: Vec<ClassModel> = (0..experiment.n_classes())
            .map(|k| class_model(experiment, k, source.matrix()))
            .collect();
        let chain = &models.chain;
        let mut registered_per_pair = [0.0; 2];
        let mut dark_per_run = [0.0; 2];
        let pair_rate = models.source.pair_rate();
        let partner_rate = pair_rate * chain.eta_854_b;
        for p in Passage::ALL {
            let raw = chain.raw_absorption(p, cfg.emission_prob)?;
            let i = passage_index(p);
            registered_per_pair[i] =
                chain.eta_854_a * chain.eta_854_b * chain.eta_393 * cfg.emission_prob * raw;
            // heralds per second that could pair with a dark count of an 854 nm detector
            let mean_overlap =
                classes.iter().map(|m| m.overlap[i]).sum::<f64>() / classes.len() as f64;
            let herald_rate = pair_rate
                * chain.eta_854_a
                * cfg.emission_prob
                * raw
                * mean_overlap
                * chain.eta_393;
            dark_per_run[i] = cfg.exposure_s
                * 2.0
                * cfg.gate_halfwidth_s
                * (2.0 * models.background.dark_rate_393 * partner_rate
                    + 2.0 * models.background.dark_rate_854 * herald_rate);
        }
        let tau = models.source.wavepacket_decay_s();
        Ok(Self {
            cfg,
            models,
            n_classes: classes.len() as u64,
            classes,
            pairs_per_run: pair_rate * cfg.exposure_s,
            registered_per_pair,
            dark_per_run,
            wavepacket: Exp::new(1.0 / tau).map_err(|e| Error::InvalidParameter {
                name: "linewidth",
                reason: e.to_string(),
            })?,
        })
    }

    fn n_chunks(&self) -> u64 {
        self.cfg.n_runs.div_ceil(self.cfg.runs_per_chunk)
    }

    /// Mean registered coincidences (signal plus accidentals) per run of a class.
    fn registered_per_run(&self, class: usize, p: Passage) -> f64 {
        let i = passage_index(p);
        self.pairs_per_run * self.registered_per_pair[i] * self.classes[class].overlap[i]
    }

    fn simulate_chunk(&self, chunk: u64) -> Result<Vec<Coincidence>> {
        let cfg = self.cfg;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(chunk);
        let r0 = chunk * cfg.runs_per_chunk;
        let r1 = (r0 + cfg.runs_per_chunk).min(cfg.n_runs);
        let f = self.models.background.accidental_fraction;
        let h = cfg.gate_halfwidth_s;
        let window = cfg.coincidence_window_s;
        let mut out = Vec::new();
        for class in 0..self.classes.len() {
            let (first, n) = runs_in_class(r0, r1, class as u64, self.n_classes);
            if n == 0 {
                continue;
            }
            for passage in Passage::ALL {
                let lambda = n as f64 * self.registered_per_run(class, passage);
                let dark = n as f64 * self.dark_per_run[passage_index(passage)];
                let counts = [
                    (Kind::Signal, poisson(lambda * (1.0 - f), &mut rng)?),
                    (
                        Kind::Accidental,
                        poisson(lambda * f * window / h, &mut rng)?,
                    ),
                    (Kind::Accidental, poisson(dark * window / h, &mut rng)?),
                ];
                for (kind, count) in counts {
                    for _ in 0..count {
                        let run = first + self.n_classes * rng.random_range(0..n);
                        out.push(self.draw_event(run, class, passage, kind, &mut rng));
                    }
                }
            }
        }
        out.sort_by(|a, b| {
            (a.event.run_index, a.event.herald_time_ns, a.event.passage)
                .cmp(&(b.event.run_index, b.event.herald_time_ns, b.event.passage))
                .then(a.delay_s.total_cmp(&b.delay_s))
        });
        Ok(out)
    }

    fn draw_event<R: Rng>(
        &self,
        run: u64,
        class: usize,
        passage: Passage,
        kind: Kind,
        rng: &mut R,
    ) -> Coincidence {
        let cfg = self.cfg;
        let start = rng.random::<f64>() * cfg.exposure_s;
        let herald_time = match passage {
            Passage::First => start,
            Passage::Second => start + cfg.second_passage_delay_s,
        };
        let settings = &self.classes[class].settings[passage_index(passage)];
        let setting = &settings[rng.random_range(0..settings.len())];
        let phase = event_phase(herald_time, &self.models.larmor);
        let (outcome, delay_s) = match kind {
            Kind::Signal => {
                let coherence = self.models.dephasing.coherence(herald_time);
                let outcome = setting.sample(coherence, phase, rng);
                (outcome, self.wavepacket.sample(rng))
            }
            Kind::Accidental => {
                let outcome = setting.sample_white(rng);
                let w = cfg.coincidence_window_s;
                (outcome, rng.random_range(-w..w))
            }
        };
        Coincidence {
            event: EventRecord {
                run_index: run,
                passage,
                herald_time_ns: (herald_time * 1e9).floor() as u64,
                herald: outcome.herald,
                atomic: outcome.atomic,
                basis: setting.basis,
                click: outcome.click,
                phase_mrad: EventRecord::quantize_phase(phase),
                truth_accidental: Some(kind == Kind::Accidental),
            },
            delay_s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Signal,
    Accidental,
}

fn poisson<R: Rng>(mean: f64, rng: &mut R) -> Result<u64> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mean).map_err(|e| Error::InvalidParameter {
        name: "poisson mean",
        reason: format!("{mean}: {e}"),
    })?;
    Ok(d.sample(rng) as u64)
}

/// First run index ≥ `r0` in class `k` (runs with `r % n_classes == k`) and the
/// number of such runs below `r1`.
fn runs_in_class(r0: u64, r1: u64, k: u64, n_classes: u64) -> (u64, u64) {
    let first = r0 + (k + n_classes - r0 % n_classes) % n_classes;
    if first >= r1 {
        (first, 0)
    } else {
        (first, (r1 - 1 - first) / n_classes + 1)
    }
}

/// All candidate coincidences of a campaign, ordered by run index then herald time.
pub fn simulate_runs(
    cfg: &RunConfig,
    models: &Models,
    experiment: &Experiment,
) -> Result<Vec<Coincidence>> {
    let ctx = Context::new(cfg, models, experiment)?;
    let chunks: Vec<Vec<Coincidence>> = (0..ctx.n_chunks())
        .into_par_iter()
        .map(|k| ctx.simulate_chunk(k))
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Gated events of a simulated campaign together with the sideband estimate of
/// the accidental fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedEvents {
    pub events: Vec<EventRecord>,
    pub accidental_estimate: Option<f64>,
}

pub fn simulate_events(
    cfg: &RunConfig,
    models: &Models,
    experiment: &Experiment,
) -> Result<SimulatedEvents> {
    let coincidences = simulate_runs(cfg, models, experiment)?;
    Ok(SimulatedEvents {
        accidental_estimate: estimate_accidental_fraction(&coincidences, cfg),
        events: coincidence_gate(&coincidences, cfg.gate_halfwidth_s),
    })
}

/// Mean gated coincidences per passage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedCounts {
    pub signal: f64,
    pub accidental: f64,
    pub dark: f64,
}

impl ExpectedCounts {
    pub fn total(&self) -> f64 {
        self.signal + self.accidental + self.dark
    }
}

/// Analytic counterpart of [`simulate_events`]: gated counts per passage.
pub fn expected_gated_counts(
    cfg: &RunConfig,
    models: &Models,
    experiment: &Experiment,
) -> Result<[ExpectedCounts; 2]> {
    let ctx = Context::new(cfg, models, experiment)?;
    let f = models.background.accidental_fraction;
    let acceptance =
        super::gate::gate_acceptance(cfg.gate_halfwidth_s, models.source.wavepacket_decay_s());
    let mut out = [ExpectedCounts {
        signal: 0.0,
        accidental: 0.0,
        dark: 0.0,
    }; 2];
    for p in Passage::ALL {
        let i = passage_index(p);
        let mut registered = 0.0;
        for class in 0..ctx.classes.len() {
            let (_, n) = runs_in_class(0, cfg.n_runs, class as u64, ctx.n_classes);
            registered += n as f64 * ctx.registered_per_run(class, p);
        }
        out[i] = ExpectedCounts {
            signal: registered * (1.0 - f) * acceptance,
            accidental: registered * f,
            dark: cfg.n_runs as f64 * ctx.dark_per_run[i],
        };
    }
    Ok(out)
}

/// Expected counts of every cell when each (setting, phase bin) group holds
/// `counts_per_group` events: bin-averaged Born probabilities at the
/// exposure-averaged coherence, mixed with the white accidental floor.
pub fn exact_counts_table(
    cfg: &RunConfig,
    models: &Models,
    experiment: &Experiment,
    counts_per_group: f64,
) -> Result<CountsTable> {
    let ctx = Context::new(cfg, models, experiment)?;
    let n_bins = cfg.larmor_bins;
    let coherence = models.dephasing.mean_coherence(0.0, cfg.exposure_s);
    let f = models.background.accidental_fraction;
    let mut table = CountsTable::new(n_bins)?;
    for (class, model) in ctx.classes.iter().enumerate() {
        for passage in Passage::ALL {
            for setting in &model.settings[passage_index(passage)] {
                for bin in 0..n_bins as u16 {
                    let (lo, hi) = bin_edges(bin, n_bins);
                    let half = 0.5 * (hi - lo);
                    let avg = C64::from_polar(coherence * half.sin() / half, -0.5 * (lo + hi));
                    let probs: Vec<f64> = setting
                        .branches
                        .iter()
                        .map(|br| (br.a + (avg * br.b).re).max(0.0))
                        .collect();
                    let total: f64 = probs.iter().sum();
                    let white = 1.0 / probs.len() as f64;
                    for (br, p) in setting.branches.iter().zip(probs) {
                        let key = CellKey {
                            setting: Setting {
                                passage,
                                input: class as u16,
                                basis: setting.basis,
                                mode: setting.mode,
                            },
                            bin,
                            outcome: br.outcome,
                        };
                        table.add(key, counts_per_group * ((1.0 - f) * p / total + f * white));
                    }
                }
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Polarization;

    #[test]
    fn class_ranges() {
        assert_eq!(runs_in_class(0, 10, 0, 3), (0, 4));
        assert_eq!(runs_in_class(0, 10, 2, 3), (2, 3));
        assert_eq!(runs_in_class(4, 5, 1, 3), (4, 1));
        assert_eq!(runs_in_class(4, 5, 2, 3).1, 0);
        assert_eq!(runs_in_class(7, 20, 0, 1), (7, 13));
    }

    #[test]
    fn branch_probabilities_sum_to_overlap() {
        let source = source_density_matrix(&SourceModel::default()).unwrap();
        for experiment in [
            Experiment::mapping(),
            Experiment::EntanglementTransfer,
            Experiment::teleportation(),
        ] {
            for class in 0..experiment.n_classes() {
                let m = class_model(&experiment, class, source.matrix());
                for i in 0..2 {
                    assert!((m.overlap[i] - 0.5).abs() < 1e-12);
                    for s in &m.settings[i] {
                        let a: f64 = s.branches.iter().map(|b| b.a).sum();
                        let b: C64 = s.branches.iter().map(|b| b.b).sum();
                        assert!((a - 0.5).abs() < 1e-12);
                        assert!(b.norm() < 1e-12);
                        assert_eq!(s.branches.len(), experiment.outcome_cells());
                    }
                }
            }
        }
    }

    #[test]
    fn mapping_tables_follow_the_polarization() {
        let source = source_density_matrix(&SourceModel::default()).unwrap();
        let e = Experiment::Mapping {
            inputs: vec![Polarization::R],
        };
        let m = class_model(&e, 0, source.matrix());
        // |R⟩ maps to |−½⟩ in the first passage: shelving always gives 0
        let pop = &m.settings[0][0];
        for br in &pop.branches {
            let expected = if br.outcome.atomic == AtomicOutcome::Shelved0 {
                0.25
            } else {
                0.0
            };
            assert!((br.a - expected).abs() < 1e-12, "{br:?}");
        }
    }
}
