//! Campaign execution. Simulated and file-based event streams feed the same
//! tabulation and analysis, so both paths give identical results.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use ionbsm_core::estimation::{
    background_correct, bootstrap, detection_window_scan, estimate_polarization_rotation,
    linear_state_fit, mapping_process_data, mean_overlap_fidelity, ml_process_reconstruct,
    ml_state_reconstruct, state_metrics, superposition_fringes, teleport_process_data,
    transfer_state_data, transfer_target, MlOptions, ModelOptions, ProcessData, ScanOptions,
};
use ionbsm_core::montecarlo::{
    exact_counts_table, simulate_events, write_events, BudgetReport, CountsTable, EventMetadata,
    EventReader, EventRecord, Experiment, ReadoutMode,
};
use ionbsm_core::protocol::{mapping_unitary, pauli_correction};
use ionbsm_core::{BellState, DensityMatrix, Operator, Passage, Pauli};
use nalgebra::{Rotation3, Unit, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::Serialize;

use crate::config::{CampaignConfig, CampaignKind};
use crate::error::{CliError, Result};
use crate::output;

/// Keeps bootstrap draws apart from the simulator's streams under the same seed.
const BOOTSTRAP_SALT: u64 = 0x5eed_b007_57a9_0001;
const ROTATION_SALT: u64 = 0x5eed_0707_a710_0002;

/// Running tabulation of an event stream.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub table: CountsTable,
    pub events: f64,
    /// Events carrying a truth flag, and how many of those are accidentals.
    pub truth_flagged: u64,
    pub truth_accidental: u64,
    experiment: Experiment,
    keep_truth: bool,
}

impl Tabulation {
    pub fn new(cfg: &CampaignConfig, keep_truth: bool) -> Result<Self> {
        Ok(Self {
            table: CountsTable::new(cfg.run.larmor_bins)?,
            events: 0.0,
            truth_flagged: 0,
            truth_accidental: 0,
            experiment: cfg.protocol(),
            keep_truth,
        })
    }

    pub fn record(&mut self, event: &EventRecord) {
        self.table.record(event, &self.experiment);
        self.events += 1.0;
        if let (true, Some(acc)) = (self.keep_truth, event.truth_accidental) {
            self.truth_flagged += 1;
            self.truth_accidental += acc as u64;
        }
    }

    fn truth_fraction(&self) -> Option<f64> {
        (self.truth_flagged > 0).then(|| self.truth_accidental as f64 / self.truth_flagged as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Uncertain {
    pub value: f64,
    /// Bootstrap standard deviation; absent without resamples.
    pub std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateResult {
    pub passage: Passage,
    pub target: String,
    pub events: f64,
    pub fidelity: Uncertain,
    pub purity: Uncertain,
    pub linear_fidelity: Option<f64>,
    pub linear_physical: Option<bool>,
    pub corrected_fidelity: Option<f64>,
    pub corrected_purity: Option<f64>,
    pub ml_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcessResult {
    /// Bell outcome for teleportation, passage for mapping.
    pub label: String,
    pub correction: String,
    pub events: f64,
    /// χ weight of the expected Pauli operation.
    pub fidelity: Uncertain,
    pub chi_diagonal: [f64; 4],
    pub mean_overlap_fidelity: f64,
    pub corrected_fidelity: Option<f64>,
    pub ml_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FringeResult {
    pub passage: Passage,
    pub basis: String,
    pub click: u8,
    pub visibility: f64,
    pub phi0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub window_s: f64,
    pub offsets_s: Vec<f64>,
    pub fidelities: Vec<f64>,
    pub events: Vec<usize>,
    pub slope: f64,
    pub non_increasing: bool,
    pub target_slope: Option<f64>,
    pub sigma_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotationResult {
    pub n_pairs: usize,
    pub rotation: [[f64; 3]; 3],
    pub angle_rad: f64,
    pub rms_error: f64,
    /// Present for synthetic pairs.
    pub true_angle_rad: Option<f64>,
    pub max_entry_error: Option<f64>,
}

/// Machine-readable results; `summary.json` is its serialization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub seed: u64,
    pub larmor_bins: usize,
    pub bootstrap_resamples: usize,
    pub events: f64,
    pub skipped_lines: usize,
    pub accidental_estimate: Option<f64>,
    pub truth_accidental_fraction: Option<f64>,
    pub states: Vec<StateResult>,
    pub processes: Vec<ProcessResult>,
    pub mean_process_fidelity: Option<f64>,
    pub mean_overlap_fidelity: Option<f64>,
    pub fringes: Vec<FringeResult>,
    pub budget: Option<BudgetReport>,
    pub scan: Option<ScanResult>,
    pub rotation: Option<RotationResult>,
}

impl Summary {
    fn new(cfg: &CampaignConfig) -> Self {
        Self {
            experiment: cfg.experiment.label().to_owned(),
            seed: cfg.run.seed,
            larmor_bins: cfg.run.larmor_bins,
            bootstrap_resamples: cfg.bootstrap,
            events: 0.0,
            skipped_lines: 0,
            accidental_estimate: None,
            truth_accidental_fraction: None,
            states: Vec::new(),
            processes: Vec::new(),
            mean_process_fidelity: None,
            mean_overlap_fidelity: None,
            fringes: Vec::new(),
            budget: None,
            scan: None,
            rotation: None,
        }
    }
}

/// Everything a campaign writes besides the event file.
#[derive(Debug, Clone, PartialEq)]
pub struct Outputs {
    pub summary: Summary,
    pub tomography: String,
    pub counts: Option<String>,
    pub scan: Option<String>,
}

impl Outputs {
    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        output::ensure_dir(dir)?;
        output::write_atomic(dir, output::SUMMARY_JSON, &self.summary_json())?;
        output::write_atomic(dir, output::SUMMARY_TEXT, &summary_text(&self.summary))?;
        if !self.tomography.is_empty() {
            output::write_atomic(dir, output::TOMOGRAPHY, &self.tomography)?;
        }
        if let Some(c) = &self.counts {
            output::write_atomic(dir, output::COUNTS, c)?;
        }
        if let Some(s) = &self.scan {
            output::write_atomic(dir, output::SCAN, s)?;
        }
        Ok(())
    }
}

fn ml_options(cfg: &CampaignConfig) -> MlOptions {
    MlOptions {
        max_iterations: cfg.ml_max_iterations,
        ..Default::default()
    }
}

fn ml_stage<T>(stage: impl Into<String>, r: ionbsm_core::Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        ionbsm_core::Error::NotConverged { .. } => CliError::NotConverged {
            stage: stage.into(),
            source: e,
        },
        other => other.into(),
    })
}

/// Runs the campaign described by `cfg` and writes its outputs to `cfg.out`.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<Outputs> {
    cfg.validate()?;
    output::ensure_dir(&cfg.out)?;
    let outputs = match cfg.experiment {
        CampaignKind::EfficiencyBudget => budget(cfg)?,
        CampaignKind::WindowScan => window_scan(cfg)?,
        CampaignKind::RotationEstimate => rotation(cfg)?,
        _ => simulate(cfg)?,
    };
    outputs.write(&cfg.out)?;
    Ok(outputs)
}

/// Simulates events (or takes exact expected counts), optionally writes the
/// event file, and analyzes the tabulated counts.
fn simulate(cfg: &CampaignConfig) -> Result<Outputs> {
    let experiment = cfg.protocol();
    let models = cfg.models()?;
    if let Some(per_group) = cfg.exact_counts {
        let table = exact_counts_table(&cfg.run, &models, &experiment, per_group)?;
        let f = models.background.accidental_fraction;
        let tab = Tabulation {
            events: table.total(),
            table,
            truth_flagged: 0,
            truth_accidental: 0,
            experiment,
            keep_truth: false,
        };
        return analyze_tabulation(cfg, &tab, (f > 0.0).then_some(f), 0);
    }
    let sim = simulate_events(&cfg.run, &models, &experiment)?;
    if cfg.write_events {
        let mut meta = EventMetadata::default();
        meta.entries
            .insert("experiment".into(), experiment.label().into());
        meta.entries.insert("seed".into(), cfg.run.seed.to_string());
        if let Some(f) = sim.accidental_estimate {
            meta.set_accidental_estimate(f);
        }
        output::ensure_dir(&cfg.out)?;
        output::write_with(&cfg.out, output::EVENTS, |w| {
            write_events(w, &meta, &sim.events, cfg.truth).map_err(std::io::Error::other)
        })?;
    }
    let mut tab = Tabulation::new(cfg, cfg.truth)?;
    for e in &sim.events {
        tab.record(e);
    }
    analyze_tabulation(cfg, &tab, sim.accidental_estimate, 0)
}

/// Streams an event file through the tabulation and analyzes it.
pub fn analyze_file(cfg: &CampaignConfig, path: &Path, strict: bool) -> Result<Outputs> {
    cfg.validate()?;
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = EventReader::new(BufReader::new(file), strict);
    let mut tab = Tabulation::new(cfg, true)?;
    for record in reader.by_ref() {
        tab.record(&record?);
    }
    if tab.events == 0.0 {
        return Err(ionbsm_core::Error::NoEvents.into());
    }
    let meta = reader.metadata();
    if let Some(kind) = meta.entries.get("experiment") {
        if kind != cfg.protocol().label() {
            return Err(ionbsm_core::Error::InvalidParameter {
                name: "experiment",
                reason: format!(
                    "event file holds `{kind}` events but the config describes `{}`",
                    cfg.protocol().label()
                ),
            }
            .into());
        }
    }
    let f = meta.accidental_estimate()?;
    analyze_tabulation(cfg, &tab, f, reader.skipped())
}

/// Estimation shared by the simulated and file-based paths.
pub fn analyze_tabulation(
    cfg: &CampaignConfig,
    tab: &Tabulation,
    accidental_estimate: Option<f64>,
    skipped: usize,
) -> Result<Outputs> {
    if tab.events == 0.0 {
        return Err(ionbsm_core::Error::NoEvents.into());
    }
    let opts = ModelOptions {
        correct_binning: cfg.correct_binning,
    };
    let mut summary = Summary::new(cfg);
    summary.events = tab.events;
    summary.skipped_lines = skipped;
    summary.accidental_estimate = accidental_estimate;
    summary.truth_accidental_fraction = tab.truth_fraction();
    let corrected = accidental_estimate
        .filter(|&f| f > 0.0)
        .map(|f| background_correct(&tab.table, f, &tab.experiment));
    let mut tomography = String::new();
    let passages: Vec<Passage> = Passage::ALL
        .into_iter()
        .filter(|p| tab.table.iter().any(|(k, _)| k.setting.passage == *p))
        .collect();

    match &tab.experiment {
        Experiment::EntanglementTransfer => {
            for &p in &passages {
                let (state, result) = transfer_state(cfg, &tab.table, corrected.as_ref(), p, opts)?;
                write_matrix(
                    &mut tomography,
                    &format!(
                        "state {p} passage (photon B, atom), target {}",
                        result.target
                    ),
                    state.matrix(),
                );
                summary.states.push(result);
            }
        }
        Experiment::Teleportation { inputs } => {
            for bell in BellState::ALL {
                let data_of = |t: &CountsTable| teleport_process_data(t, inputs, bell, opts);
                let (chi, result) = process(
                    cfg,
                    &tab.table,
                    corrected.as_ref(),
                    bell.name(),
                    pauli_correction(bell),
                    &data_of,
                )?;
                write_matrix(
                    &mut tomography,
                    &format!("process chi {bell}, correction {}", result.correction),
                    chi.matrix(),
                );
                summary.processes.push(result);
            }
        }
        Experiment::Mapping { inputs } => {
            for &p in &passages {
                let data_of = |t: &CountsTable| mapping_process_data(t, inputs, p, opts);
                let (chi, result) = process(
                    cfg,
                    &tab.table,
                    corrected.as_ref(),
                    p.label(),
                    mapping_unitary(p),
                    &data_of,
                )?;
                write_matrix(
                    &mut tomography,
                    &format!("process chi {p} passage, mapping {}", result.correction),
                    chi.matrix(),
                );
                summary.processes.push(result);
            }
        }
    }
    if !summary.processes.is_empty() {
        let n = summary.processes.len() as f64;
        summary.mean_process_fidelity = Some(
            summary
                .processes
                .iter()
                .map(|r| r.fidelity.value)
                .sum::<f64>()
                / n,
        );
        summary.mean_overlap_fidelity = Some(
            summary
                .processes
                .iter()
                .map(|r| r.mean_overlap_fidelity)
                .sum::<f64>()
                / n,
        );
    }
    for &p in &passages {
        for (basis, click, fit) in superposition_fringes(&tab.table, p, cfg.correct_binning) {
            summary.fringes.push(FringeResult {
                passage: p,
                basis: basis.label().to_owned(),
                click,
                visibility: fit.visibility,
                phi0: fit.phi0,
            });
        }
    }
    Ok(Outputs {
        summary,
        tomography,
        counts: Some(counts_tsv(&tab.table)),
        scan: None,
    })
}

fn transfer_state(
    cfg: &CampaignConfig,
    table: &CountsTable,
    corrected: Option<&CountsTable>,
    passage: Passage,
    opts: ModelOptions,
) -> Result<(DensityMatrix, StateResult)> {
    let target = transfer_target(passage);
    let stage = format!("state reconstruction, {passage} passage");
    let estimate = |t: &CountsTable| -> ionbsm_core::Result<(DensityMatrix, usize, f64, f64)> {
        let data = transfer_state_data(t, passage, opts)?;
        let ml = ml_state_reconstruct(&data, ml_options(cfg))?;
        let m = state_metrics(&ml.state, target)?;
        Ok((ml.state, ml.iterations, m.fidelity, m.purity))
    };
    let data = transfer_state_data(table, passage, opts)?;
    let linear = linear_state_fit(&data).ok();
    let linear_fidelity = match &linear {
        Some(l) => Some(state_metrics(&l.state, target)?.fidelity),
        None => None,
    };
    let (state, iterations, fidelity, purity) = ml_stage(stage.clone(), estimate(table))?;
    let (corrected_fidelity, corrected_purity) = match corrected {
        Some(t) => {
            let (_, _, f, p) = ml_stage(format!("{stage}, background corrected"), estimate(t))?;
            (Some(f), Some(p))
        }
        None => (None, None),
    };
    let own = table.filter(|k| k.setting.passage == passage);
    let spread = spread(cfg, &own, |t| estimate(t).map(|(_, _, f, p)| vec![f, p]))?;
    let result = StateResult {
        passage,
        target: target.name().to_owned(),
        events: data.total(),
        fidelity: Uncertain {
            value: fidelity,
            std: spread.as_ref().map(|s| s[0]),
        },
        purity: Uncertain {
            value: purity,
            std: spread.as_ref().map(|s| s[1]),
        },
        linear_fidelity,
        linear_physical: linear.map(|l| l.physical),
        corrected_fidelity,
        corrected_purity,
        ml_iterations: iterations,
    };
    Ok((state, result))
}

fn process(
    cfg: &CampaignConfig,
    table: &CountsTable,
    corrected: Option<&CountsTable>,
    label: &str,
    expected: Pauli,
    data_of: &(dyn Fn(&CountsTable) -> ionbsm_core::Result<ProcessData> + Sync),
) -> Result<(Operator, ProcessResult)> {
    let stage = format!("process reconstruction, {label}");
    let estimate = |t: &CountsTable| {
        let data = data_of(t)?;
        ml_process_reconstruct(&data, ml_options(cfg))
    };
    let events = data_of(table)?.total();
    let est = ml_stage(stage.clone(), estimate(table))?;
    let fidelity = est.process.pauli_weight(expected);
    let corrected_fidelity = match corrected {
        Some(t) => Some(
            ml_stage(format!("{stage}, background corrected"), estimate(t))?
                .process
                .pauli_weight(expected),
        ),
        None => None,
    };
    let spread = spread(cfg, table, |t| {
        estimate(t).map(|e| vec![e.process.pauli_weight(expected)])
    })?;
    let result = ProcessResult {
        label: label.to_owned(),
        correction: expected.label().to_owned(),
        events,
        fidelity: Uncertain {
            value: fidelity,
            std: spread.map(|s| s[0]),
        },
        chi_diagonal: est.process.diagonal(),
        mean_overlap_fidelity: mean_overlap_fidelity(fidelity),
        corrected_fidelity,
        ml_iterations: est.iterations,
    };
    Ok((est.process.chi().clone(), result))
}

/// Bootstrap standard deviations of `metrics`, or `None` without resamples.
fn spread<F>(cfg: &CampaignConfig, table: &CountsTable, metrics: F) -> Result<Option<Vec<f64>>>
where
    F: Fn(&CountsTable) -> ionbsm_core::Result<Vec<f64>> + Sync,
{
    if cfg.bootstrap == 0 {
        return Ok(None);
    }
    let s = bootstrap(table, cfg.bootstrap, cfg.run.seed ^ BOOTSTRAP_SALT, metrics)?;
    Ok((s.resamples > 1).then_some(s.std))
}

fn budget(cfg: &CampaignConfig) -> Result<Outputs> {
    let mut summary = Summary::new(cfg);
    summary.budget = Some(cfg.budget.report(&cfg.chain)?);
    Ok(Outputs {
        summary,
        tomography: String::new(),
        counts: None,
        scan: None,
    })
}

fn window_scan(cfg: &CampaignConfig) -> Result<Outputs> {
    let models = cfg.models()?;
    let sim = simulate_events(&cfg.run, &models, &Experiment::EntanglementTransfer)?;
    let opts = ScanOptions {
        window_s: cfg.scan.window_s,
        offsets_s: cfg.scan.offsets_s.clone(),
        n_bins: cfg.run.larmor_bins,
        passage: cfg.scan.passage,
        model: ModelOptions {
            correct_binning: cfg.correct_binning,
        },
        ml: ml_options(cfg),
        accidental_fraction: None,
    };
    let scan = ml_stage("window scan", detection_window_scan(&sim.events, &opts))?;
    let mut tsv = String::from("offset_s\twindow_s\tfidelity\tevents\n");
    for p in &scan.points {
        let _ = writeln!(
            tsv,
            "{:e}\t{:e}\t{}\t{}",
            p.offset_s, opts.window_s, p.fidelity, p.events
        );
    }
    let mut summary = Summary::new(cfg);
    summary.events = sim.events.len() as f64;
    summary.accidental_estimate = sim.accidental_estimate;
    summary.scan = Some(ScanResult {
        window_s: opts.window_s,
        offsets_s: scan.points.iter().map(|p| p.offset_s).collect(),
        fidelities: scan.points.iter().map(|p| p.fidelity).collect(),
        events: scan.points.iter().map(|p| p.events).collect(),
        slope: scan.slope,
        non_increasing: scan.is_non_increasing(),
        target_slope: cfg.scan.target_slope,
        sigma_rate: models.dephasing.sigma_rate,
    });
    Ok(Outputs {
        summary,
        tomography: String::new(),
        counts: None,
        scan: Some(tsv),
    })
}

fn rotation(cfg: &CampaignConfig) -> Result<Outputs> {
    let rc = &cfg.rotation;
    let (pairs, truth) = match &rc.pairs {
        Some(path) => (read_pairs(path)?, None),
        None => {
            let axis = Unit::new_normalize(Vector3::from(rc.axis));
            let r = Rotation3::from_axis_angle(&axis, rc.angle_rad);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed ^ ROTATION_SALT);
            let noise =
                Normal::new(0.0, rc.noise).map_err(|e| ionbsm_core::Error::InvalidParameter {
                    name: "rotation.noise",
                    reason: e.to_string(),
                })?;
            let pairs = (0..rc.n_pairs)
                .map(|_| {
                    let g = Vector3::from_fn(|_, _| StandardNormal.sample(&mut rng));
                    let p: Vector3<f64> = g.normalize();
                    let m = r * p + Vector3::from_fn(|_, _| noise.sample(&mut rng));
                    (p, m)
                })
                .collect::<Vec<_>>();
            (pairs, Some(r))
        }
    };
    let est = estimate_polarization_rotation(&pairs)?;
    let m = est.rotation;
    let mut summary = Summary::new(cfg);
    summary.rotation = Some(RotationResult {
        n_pairs: pairs.len(),
        rotation: [0, 1, 2].map(|i| [0, 1, 2].map(|j| m[(i, j)])),
        angle_rad: est.angle(),
        rms_error: est.rms_error,
        true_angle_rad: truth.map(|r| r.angle()),
        max_entry_error: truth.map(|r| (r.matrix() - m).abs().max()),
    });
    Ok(Outputs {
        summary,
        tomography: String::new(),
        counts: None,
        scan: None,
    })
}

fn read_pairs(path: &Path) -> Result<Vec<(Vector3<f64>, Vector3<f64>)>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| ionbsm_core::Error::MalformedRecord {
                line: i + 1,
                reason: format!("{e}"),
            })?;
        if v.len() != 6 {
            return Err(ionbsm_core::Error::MalformedRecord {
                line: i + 1,
                reason: format!("expected 6 numbers, found {}", v.len()),
            }
            .into());
        }
        pairs.push((
            Vector3::new(v[0], v[1], v[2]),
            Vector3::new(v[3], v[4], v[5]),
        ));
    }
    Ok(pairs)
}

fn write_matrix(out: &mut String, title: &str, m: &nalgebra::DMatrix<ionbsm_core::qmath::C64>) {
    let _ = writeln!(out, "# {title}");
    for (part, f) in [("re", 0), ("im", 1)] {
        let _ = writeln!(out, "{part}");
        for i in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols())
                .map(|j| {
                    let z = m[(i, j)];
                    format!("{:+.6}", if f == 0 { z.re } else { z.im })
                })
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out.push('\n');
}

fn counts_tsv(table: &CountsTable) -> String {
    let mut s = String::from("passage\tinput\tbasis\tmode\tbin\therald\tatomic\tclick\tcount\n");
    for (k, v) in table.iter() {
        let mode = match k.setting.mode {
            ReadoutMode::Population => "population",
            ReadoutMode::Superposition => "superposition",
        };
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            k.setting.passage,
            k.setting.input,
            k.setting.basis.label(),
            mode,
            k.bin,
            k.outcome.herald.label(),
            k.outcome.atomic.label(),
            k.outcome.click,
            v
        );
    }
    s
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), |x| format!("{x:.4}"))
}

fn with_std(u: &Uncertain) -> String {
    match u.std {
        Some(s) => format!("{:.4} ± {:.4}", u.value, s),
        None => format!("{:.4}", u.value),
    }
}

/// Human-readable rendering of a summary.
pub fn summary_text(s: &Summary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "experiment\t{}", s.experiment);
    let _ = writeln!(out, "seed\t{}", s.seed);
    if s.events > 0.0 {
        let _ = writeln!(out, "events\t{}", s.events);
        let _ = writeln!(out, "skipped lines\t{}", s.skipped_lines);
        let _ = writeln!(
            out,
            "accidental fraction (sideband)\t{}",
            opt(s.accidental_estimate)
        );
        if s.truth_accidental_fraction.is_some() {
            let _ = writeln!(
                out,
                "accidental fraction (truth)\t{}",
                opt(s.truth_accidental_fraction)
            );
        }
    }
    if !s.states.is_empty() {
        let _ = writeln!(out, "\npassage\ttarget\tevents\tfidelity\tpurity\tlinear fidelity\tcorrected fidelity\tcorrected purity");
        for r in &s.states {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.passage,
                r.target,
                r.events,
                with_std(&r.fidelity),
                with_std(&r.purity),
                opt(r.linear_fidelity),
                opt(r.corrected_fidelity),
                opt(r.corrected_purity)
            );
        }
    }
    if !s.processes.is_empty() {
        let _ = writeln!(out, "\noutcome\tcorrection\tevents\tprocess fidelity\tmean overlap\tcorrected fidelity\tchi diagonal (I X Y Z)");
        for r in &s.processes {
            let d = r.chi_diagonal;
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{:.4}\t{}\t{:.4} {:.4} {:.4} {:.4}",
                r.label,
                r.correction,
                r.events,
                with_std(&r.fidelity),
                r.mean_overlap_fidelity,
                opt(r.corrected_fidelity),
                d[0],
                d[1],
                d[2],
                d[3]
            );
        }
        let _ = writeln!(
            out,
            "mean process fidelity\t{}",
            opt(s.mean_process_fidelity)
        );
        let _ = writeln!(
            out,
            "mean overlap fidelity\t{}",
            opt(s.mean_overlap_fidelity)
        );
    }
    if !s.fringes.is_empty() {
        let _ = writeln!(out, "\npassage\tbasis\tclick\tvisibility\tphi0");
        for f in &s.fringes {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{:.4}\t{:.4}",
                f.passage, f.basis, f.click, f.visibility, f.phi0
            );
        }
    }
    if let Some(b) = &s.budget {
        let _ = writeln!(out, "\nquantity\tfirst passage\tsecond passage");
        let _ = writeln!(
            out,
            "success per run\t{:.2e}\t{:.2e}",
            b.success.per_run_first, b.success.per_run_second
        );
        let _ = writeln!(
            out,
            "success per pair\t{:.2e}\t{:.2e}",
            b.success.per_pair_first, b.success.per_pair_second
        );
        let _ = writeln!(
            out,
            "absorption efficiency\t{:.2e}\t{:.2e}",
            b.eta_abs_first, b.eta_abs_second
        );
        let _ = writeln!(
            out,
            "absorption and herald\t{:.2e}\t{:.2e}",
            b.herald_success_first, b.herald_success_second
        );
        let _ = writeln!(out, "total pairs\t{:.4e}", b.n_pairs);
        let _ = writeln!(out, "total exposure (h)\t{:.1}", b.total_exposure_h);
        let _ = writeln!(out, "detection chain product\t{:.4e}", b.chain_product);
        let _ = writeln!(out, "mapping efficiency\t{:.2e}", b.mapping_efficiency);
    }
    if let Some(sc) = &s.scan {
        let _ = writeln!(out, "\noffset (us)\tfidelity\tevents");
        for ((o, f), n) in sc.offsets_s.iter().zip(&sc.fidelities).zip(&sc.events) {
            let _ = writeln!(out, "{:.0}\t{:.4}\t{}", o * 1e6, f, n);
        }
        let _ = writeln!(out, "slope (1/s)\t{:.1}", sc.slope);
        let _ = writeln!(out, "non-increasing\t{}", sc.non_increasing);
        let _ = writeln!(out, "dephasing rate (rad/s)\t{:.1}", sc.sigma_rate);
    }
    if let Some(r) = &s.rotation {
        let _ = writeln!(out, "\npairs\t{}", r.n_pairs);
        for row in &r.rotation {
            let _ = writeln!(out, "{:+.5} {:+.5} {:+.5}", row[0], row[1], row[2]);
        }
        let _ = writeln!(out, "angle (rad)\t{:.5}", r.angle_rad);
        let _ = writeln!(out, "rms residual\t{:.5}", r.rms_error);
        if let Some(a) = r.true_angle_rad {
            let _ = writeln!(out, "true angle (rad)\t{a:.5}");
        }
    }
    out
}
