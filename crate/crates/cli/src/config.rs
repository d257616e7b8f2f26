//! Campaign configuration. Every field defaults to the published setting, so
//! an empty file describes a paper-scale entanglement-transfer campaign.

use std::path::{Path, PathBuf};

use ionbsm_core::estimation::MlOptions;
use ionbsm_core::montecarlo::{
    BudgetInputs, EfficiencyChain, Experiment, Models, RunConfig, TeleportInput,
};
use ionbsm_core::noise::{
    calibrate_dephasing_scan, BackgroundModel, DephasingModel, GapCalibration, ScanGeometry,
    SourceModel,
};
use ionbsm_core::{LarmorConfig, Passage, Polarization};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CampaignKind {
    Mapping,
    #[default]
    EntanglementTransfer,
    Teleportation,
    EfficiencyBudget,
    WindowScan,
    RotationEstimate,
}

impl CampaignKind {
    pub fn label(self) -> &'static str {
        match self {
            CampaignKind::Mapping => "mapping",
            CampaignKind::EntanglementTransfer => "entanglement-transfer",
            CampaignKind::Teleportation => "teleportation",
            CampaignKind::EfficiencyBudget => "efficiency-budget",
            CampaignKind::WindowScan => "window-scan",
            CampaignKind::RotationEstimate => "rotation-estimate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub window_s: f64,
    pub offsets_s: Vec<f64>,
    pub passage: Passage,
    /// Fidelity slope (per second) to calibrate the dephasing against. When
    /// unset, dephasing comes from `[dephasing]` or the gap calibration.
    pub target_slope: Option<f64>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            window_s: 50e-6,
            offsets_s: (0..7).map(|k| k as f64 * 50e-6).collect(),
            passage: Passage::First,
            target_slope: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RotationConfig {
    /// Whitespace-separated `px py pz mx my mz` rows. Without a file, pairs are
    /// synthesized from the rotation below.
    pub pairs: Option<PathBuf>,
    pub n_pairs: usize,
    pub axis: [f64; 3],
    pub angle_rad: f64,
    /// Gaussian noise per Stokes component of the measured vectors.
    pub noise: f64,
}

impl Default for RotationConfig {
    fn default() -> Self {
        Self {
            pairs: None,
            n_pairs: 36,
            axis: [1.0, 1.0, 0.0],
            angle_rad: 0.3,
            noise: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub experiment: CampaignKind,
    pub out: PathBuf,
    /// Keep the truth flag of simulated events in the event file and summary.
    pub truth: bool,
    pub bootstrap: usize,
    pub write_events: bool,
    pub correct_binning: bool,
    /// Iteration cap of the maximum-likelihood estimators.
    pub ml_max_iterations: usize,
    /// Analyze expected counts with this many events per (setting, bin) group
    /// instead of sampled events.
    pub exact_counts: Option<f64>,
    pub mapping_inputs: Vec<Polarization>,
    pub teleport_inputs: Vec<TeleportInput>,
    pub run: RunConfig,
    pub source: SourceModel,
    /// Overrides the dephasing derived from `[calibration]`.
    pub dephasing: Option<DephasingModel>,
    /// Overrides the background derived from `[calibration]`.
    pub background: Option<BackgroundModel>,
    pub chain: EfficiencyChain,
    pub larmor: LarmorConfig,
    pub calibration: GapCalibration,
    pub budget: BudgetInputs,
    pub scan: ScanConfig,
    pub rotation: RotationConfig,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        let Experiment::Mapping { inputs: mapping } = Experiment::mapping() else {
            unreachable!()
        };
        let Experiment::Teleportation { inputs: teleport } = Experiment::teleportation() else {
            unreachable!()
        };
        Self {
            experiment: CampaignKind::default(),
            out: PathBuf::from("results"),
            truth: false,
            bootstrap: 200,
            write_events: true,
            correct_binning: true,
            ml_max_iterations: MlOptions::default().max_iterations,
            exact_counts: None,
            mapping_inputs: mapping,
            teleport_inputs: teleport,
            run: RunConfig::default(),
            source: SourceModel::default(),
            dephasing: None,
            background: None,
            chain: EfficiencyChain::default(),
            larmor: LarmorConfig::default(),
            calibration: GapCalibration::default(),
            budget: BudgetInputs::default(),
            scan: ScanConfig::default(),
            rotation: RotationConfig::default(),
        }
    }
}

impl CampaignConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config {
            path: path.to_owned(),
            reason: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.to_owned(),
            reason: e.to_string(),
        })?;
        Self::parse(&text, path)
    }

    /// Protocol and input schedule; window scans run on entanglement transfer.
    pub fn protocol(&self) -> Experiment {
        match self.experiment {
            CampaignKind::Mapping => Experiment::Mapping {
                inputs: self.mapping_inputs.clone(),
            },
            CampaignKind::Teleportation => Experiment::Teleportation {
                inputs: self.teleport_inputs.clone(),
            },
            _ => Experiment::EntanglementTransfer,
        }
    }

    /// Physical models with the calibrated background and dephasing filled in
    /// where no explicit model is given.
    pub fn models(&self) -> Result<Models> {
        let background = match self.background {
            Some(b) => b,
            None => self.calibration.background()?,
        };
        let dephasing = match (self.experiment, self.scan.target_slope, self.dephasing) {
            (CampaignKind::WindowScan, Some(slope), _) => {
                let geometry = ScanGeometry {
                    offsets_s: self.scan.offsets_s.clone(),
                    window_s: self.scan.window_s,
                    coherence_weight: self.source.werner_weight
                        * (1.0 - background.accidental_fraction),
                };
                calibrate_dephasing_scan(slope, &geometry)?
            }
            (_, _, Some(d)) => d,
            _ => self.calibration.dephasing(self.source.werner_weight)?,
        };
        Ok(Models {
            source: self.source,
            dephasing,
            background,
            chain: self.chain,
            larmor: self.larmor,
        })
    }

    /// Checks every sub-configuration used by the campaign.
    pub fn validate(&self) -> Result<()> {
        match self.experiment {
            CampaignKind::EfficiencyBudget => self.chain.validate()?,
            CampaignKind::RotationEstimate => {
                let axis = self.rotation.axis;
                if self.rotation.pairs.is_none()
                    && (axis.iter().all(|&a| a == 0.0) || self.rotation.n_pairs < 3)
                {
                    return Err(ionbsm_core::Error::InvalidParameter {
                        name: "rotation",
                        reason: "synthetic pairs need a non-zero axis and at least 3 pairs".into(),
                    }
                    .into());
                }
                if !(self.rotation.noise >= 0.0) {
                    return Err(ionbsm_core::Error::InvalidParameter {
                        name: "rotation.noise",
                        reason: format!("{} must be non-negative", self.rotation.noise),
                    }
                    .into());
                }
            }
            _ => {
                if self.ml_max_iterations == 0 {
                    return Err(ionbsm_core::Error::InvalidParameter {
                        name: "ml_max_iterations",
                        reason: "must be at least 1".into(),
                    }
                    .into());
                }
                self.run.validate()?;
                self.protocol().validate()?;
                self.models()?.validate()?;
                if let Some(n) = self.exact_counts {
                    if !(n > 0.0 && n.is_finite()) {
                        return Err(ionbsm_core::Error::InvalidParameter {
                            name: "exact_counts",
                            reason: format!("{n} must be positive"),
                        }
                        .into());
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_published_defaults() {
        let cfg = CampaignConfig::parse("", Path::new("empty.toml")).unwrap();
        assert_eq!(cfg, CampaignConfig::default());
        assert_eq!(cfg.run.n_runs, 511_670_886);
        assert_eq!(cfg.bootstrap, 200);
        cfg.validate().unwrap();
    }

    #[test]
    fn sections_override_defaults() {
        let text = r#"
            experiment = "teleportation"
            bootstrap = 10
            [run]
            n_runs = 1000
            seed = 7
            [source]
            werner_weight = 1.0
            [background]
            accidental_fraction = 0.0
        "#;
        let cfg = CampaignConfig::parse(text, Path::new("t.toml")).unwrap();
        assert_eq!(cfg.experiment, CampaignKind::Teleportation);
        assert_eq!(cfg.run.seed, 7);
        assert_eq!(cfg.run.exposure_s, 350e-6);
        let models = cfg.models().unwrap();
        assert_eq!(models.background.accidental_fraction, 0.0);
        assert!(models.dephasing.sigma_rate > 0.0);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let err = CampaignConfig::parse("[run]\nn_run = 3\n", Path::new("bad.toml")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn invalid_values_are_invariant_violations() {
        let cfg =
            CampaignConfig::parse("[source]\nwerner_weight = 1.5\n", Path::new("w.toml")).unwrap();
        assert_eq!(cfg.validate().unwrap_err().exit_code(), 3);
    }
}
