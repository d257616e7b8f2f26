use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{Passage, Polarization};

/// Run-level parameters of a simulated campaign. Durations in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n_runs: u64,
    pub exposure_s: f64,
    pub seed: u64,
    /// Probability that the excited ion releases the 393 nm herald photon.
    pub emission_prob: f64,
    pub gate_halfwidth_s: f64,
    pub larmor_bins: usize,
    /// Herald delay of the second passage relative to the first.
    pub second_passage_delay_s: f64,
    /// Half-width of the recorded herald/partner delay range. Accidentals fill it
    /// uniformly; the part beyond four gate half-widths is the sideband used to
    /// estimate the accidental floor.
    pub coincidence_window_s: f64,
    /// Runs per random substream. Part of the reproducibility contract: results
    /// depend on it, but not on the number of threads.
    pub runs_per_chunk: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_runs: 511_670_886,
            exposure_s: 350e-6,
            seed: 1,
            emission_prob: 0.935,
            gate_halfwidth_s: 84e-9,
            larmor_bins: 12,
            second_passage_delay_s: 160e-9,
            coincidence_window_s: 1e-6,
            runs_per_chunk: 1 << 20,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("exposure", self.exposure_s),
            ("emission_prob", self.emission_prob),
            ("gate_halfwidth", self.gate_halfwidth_s),
            ("coincidence_window", self.coincidence_window_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("{v} must be positive"),
                });
            }
        }
        if self.n_runs == 0 {
            return Err(Error::InvalidParameter {
                name: "n_runs",
                reason: "must be positive".into(),
            });
        }
        if self.emission_prob > 1.0 {
            return Err(Error::Unphysical(format!(
                "emission probability {} exceeds 1",
                self.emission_prob
            )));
        }
        if self.larmor_bins < 2 {
            return Err(Error::InvalidParameter {
                name: "larmor_bins",
                reason: format!("need at least 2 bins, got {}", self.larmor_bins),
            });
        }
        if self.runs_per_chunk == 0 {
            return Err(Error::InvalidParameter {
                name: "runs_per_chunk",
                reason: "must be positive".into(),
            });
        }
        if !(self.second_passage_delay_s >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "second_passage_delay",
                reason: "must be non-negative".into(),
            });
        }
        if self.coincidence_window_s <= self.sideband_inner_s() {
            return Err(Error::InvalidParameter {
                name: "coincidence_window",
                reason: format!(
                    "must exceed four gate half-widths ({:e} s)",
                    self.sideband_inner_s()
                ),
            });
        }
        Ok(())
    }

    /// Delays beyond this magnitude are sideband.
    pub fn sideband_inner_s(&self) -> f64 {
        4.0 * self.gate_halfwidth_s
    }

    /// Total delay width of the two sidebands.
    pub fn sideband_width_s(&self) -> f64 {
        2.0 * (self.coincidence_window_s - self.sideband_inner_s())
    }
}

/// Detection and coupling budget. `eta_abs_*` are absorption probabilities per
/// incoming photon; the defaults are those inferred from the published counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EfficiencyChain {
    pub eta_854_a: f64,
    pub eta_854_b: f64,
    pub eta_393: f64,
    pub eta_gate: f64,
    pub eta_abs_first: f64,
    pub eta_abs_second: f64,
}

impl Default for EfficiencyChain {
    fn default() -> Self {
        let mut chain = Self {
            eta_854_a: 0.30,
            eta_854_b: 0.126,
            eta_393: 0.0164,
            eta_gate: 0.999,
            eta_abs_first: 0.0,
            eta_abs_second: 0.0,
        };
        let report = super::budget::BudgetInputs::default()
            .report(&chain)
            .expect("published budget inputs are valid");
        chain.eta_abs_first = report.eta_abs_first;
        chain.eta_abs_second = report.eta_abs_second;
        chain
    }
}

impl EfficiencyChain {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eta_854_a", self.eta_854_a),
            ("eta_854_b", self.eta_854_b),
            ("eta_393", self.eta_393),
            ("eta_gate", self.eta_gate),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("{v} is outside (0, 1]"),
                });
            }
        }
        for (name, v) in [
            ("eta_abs_first", self.eta_abs_first),
            ("eta_abs_second", self.eta_abs_second),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("{v} is outside [0, 1]"),
                });
            }
        }
        Ok(())
    }

    /// `η_854,A · η_854,B · η_393 · η_gate`
    pub fn detection_product(&self) -> f64 {
        self.eta_854_a * self.eta_854_b * self.eta_393 * self.eta_gate
    }

    pub fn eta_abs(&self, passage: Passage) -> f64 {
        match passage {
            Passage::First => self.eta_abs_first,
            Passage::Second => self.eta_abs_second,
        }
    }

    /// Scattering probability for an incoming photon that lies fully in the
    /// passage's addressable subspace, before the emission factor.
    ///
    /// The per-photon absorption efficiency averages over input polarizations,
    /// of which half are addressable in each passage, so the raw value is
    /// `2·η_abs/emission`.
    pub fn raw_absorption(&self, passage: Passage, emission_prob: f64) -> Result<f64> {
        let raw = 2.0 * self.eta_abs(passage) / emission_prob;
        if raw > 1.0 + 1e-12 {
            return Err(Error::Unphysical(format!(
                "{passage} passage: absorption efficiency {} with emission probability {} \
                 implies a scattering probability of {raw}",
                self.eta_abs(passage),
                emission_prob
            )));
        }
        Ok(raw.min(1.0))
    }
}

/// Atomic input of a teleportation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TeleportInput {
    /// `(|−5/2⟩ + e^{iφ}|+5/2⟩)/√2` with the event's Larmor phase.
    Superposition,
    /// `|−5/2⟩`
    Minus,
    /// `|+5/2⟩`
    Plus,
}

impl TeleportInput {
    pub fn label(self) -> &'static str {
        match self {
            TeleportInput::Superposition => "superposition",
            TeleportInput::Minus => "-5/2",
            TeleportInput::Plus => "+5/2",
        }
    }
}

/// Which protocol is simulated, with the per-run input schedule (cycled by run index).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    /// Polarized single photons onto the symmetric D superposition; the photon-B
    /// fields of each record carry the prepared polarization.
    Mapping {
        #[serde(default = "default_polarizations")]
        inputs: Vec<Polarization>,
    },
    /// Photon A of each SPDC pair onto the symmetric D superposition; photon B is
    /// measured in a random basis.
    EntanglementTransfer,
    /// Bell measurement on photon A and the D qubit; photon B is the target.
    Teleportation {
        #[serde(default = "default_teleport_inputs")]
        inputs: Vec<TeleportInput>,
    },
}

fn default_polarizations() -> Vec<Polarization> {
    Polarization::ALL.to_vec()
}

fn default_teleport_inputs() -> Vec<TeleportInput> {
    vec![
        TeleportInput::Superposition,
        TeleportInput::Minus,
        TeleportInput::Plus,
    ]
}

impl Experiment {
    pub fn mapping() -> Self {
        Experiment::Mapping {
            inputs: default_polarizations(),
        }
    }

    pub fn teleportation() -> Self {
        Experiment::Teleportation {
            inputs: default_teleport_inputs(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Experiment::Mapping { .. } => "mapping",
            Experiment::EntanglementTransfer => "entanglement-transfer",
            Experiment::Teleportation { .. } => "teleportation",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let empty = match self {
            Experiment::Mapping { inputs } => inputs.is_empty(),
            Experiment::Teleportation { inputs } => inputs.is_empty(),
            Experiment::EntanglementTransfer => false,
        };
        if empty {
            return Err(Error::InvalidParameter {
                name: "inputs",
                reason: "input schedule is empty".into(),
            });
        }
        Ok(())
    }

    /// Length of the input schedule.
    pub fn n_classes(&self) -> usize {
        match self {
            Experiment::Mapping { inputs } => inputs.len(),
            Experiment::Teleportation { inputs } => inputs.len(),
            Experiment::EntanglementTransfer => 1,
        }
    }

    /// Position in the input schedule of a run.
    pub fn input_class(&self, run_index: u64) -> usize {
        (run_index % self.n_classes() as u64) as usize
    }

    /// Number of outcome cells (herald × atomic × photon click) per setting.
    pub fn outcome_cells(&self) -> usize {
        match self {
            Experiment::Mapping { .. } => 4,
            _ => 8,
        }
    }
}
