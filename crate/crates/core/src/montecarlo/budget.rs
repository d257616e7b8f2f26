//! Rate and efficiency arithmetic of a teleportation campaign.

use serde::{Deserialize, Serialize};

use super::config::EfficiencyChain;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessProbabilities {
    pub per_run_first: f64,
    pub per_run_second: f64,
    pub per_pair_first: f64,
    pub per_pair_second: f64,
}

pub fn success_probabilities(
    n_c_first: u64,
    n_c_second: u64,
    n_runs: u64,
    n_pairs: f64,
) -> Result<SuccessProbabilities> {
    if n_runs == 0 {
        return Err(Error::ZeroDenominator("number of runs"));
    }
    if !(n_pairs > 0.0) {
        return Err(Error::ZeroDenominator("number of pairs"));
    }
    let runs = n_runs as f64;
    Ok(SuccessProbabilities {
        per_run_first: n_c_first as f64 / runs,
        per_run_second: n_c_second as f64 / runs,
        per_pair_first: n_c_first as f64 / n_pairs,
        per_pair_second: n_c_second as f64 / n_pairs,
    })
}

/// Generated pairs over the campaign: runs × exposure × pair rate.
pub fn total_pairs(n_runs: u64, exposure_s: f64, pair_rate: f64) -> f64 {
    n_runs as f64 * exposure_s * pair_rate
}

/// Absorption probability per incoming photon from a per-pair success probability.
pub fn infer_absorption_efficiency(eta_success_pair: f64, chain: &EfficiencyChain) -> Result<f64> {
    let product = chain.detection_product();
    if product == 0.0 {
        return Err(Error::ZeroDenominator("efficiency chain product"));
    }
    Ok(eta_success_pair / product)
}

/// Recorded totals of a campaign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetInputs {
    pub n_runs: u64,
    pub exposure_s: f64,
    pub n_c_first: u64,
    pub n_c_second: u64,
    pub pair_rate_per_power: f64,
    pub pump_power_mw: f64,
    /// State-mapping run: heralded fiber-coupled photons and detected coincidences.
    pub mapping_photons: f64,
    pub mapping_coincidences: u64,
}

impl Default for BudgetInputs {
    fn default() -> Self {
        Self {
            n_runs: 511_670_886,
            exposure_s: 350e-6,
            n_c_first: 89_838,
            n_c_second: 11_322,
            pair_rate_per_power: 5.17e4,
            pump_power_mw: 15.0,
            mapping_photons: 9.3e8,
            mapping_coincidences: 7810,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub success: SuccessProbabilities,
    pub total_exposure_s: f64,
    pub total_exposure_h: f64,
    pub n_pairs: f64,
    pub chain_product: f64,
    pub eta_abs_first: f64,
    pub eta_abs_second: f64,
    /// Absorption followed by herald detection.
    pub herald_success_first: f64,
    pub herald_success_second: f64,
    pub mapping_efficiency: f64,
}

impl BudgetInputs {
    pub fn report(&self, chain: &EfficiencyChain) -> Result<BudgetReport> {
        let n_pairs = total_pairs(
            self.n_runs,
            self.exposure_s,
            self.pair_rate_per_power * self.pump_power_mw,
        );
        let success = success_probabilities(self.n_c_first, self.n_c_second, self.n_runs, n_pairs)?;
        let eta_abs_first = infer_absorption_efficiency(success.per_pair_first, chain)?;
        let eta_abs_second = infer_absorption_efficiency(success.per_pair_second, chain)?;
        if !(self.mapping_photons > 0.0) {
            return Err(Error::ZeroDenominator("mapping photon count"));
        }
        let total_exposure_s = self.n_runs as f64 * self.exposure_s;
        Ok(BudgetReport {
            success,
            total_exposure_s,
            total_exposure_h: total_exposure_s / 3600.0,
            n_pairs,
            chain_product: chain.detection_product(),
            eta_abs_first,
            eta_abs_second,
            herald_success_first: eta_abs_first * chain.eta_393,
            herald_success_second: eta_abs_second * chain.eta_393,
            mapping_efficiency: self.mapping_coincidences as f64 / self.mapping_photons,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> EfficiencyChain {
        EfficiencyChain {
            eta_854_a: 0.30,
            eta_854_b: 0.126,
            eta_393: 0.0164,
            eta_gate: 0.999,
            eta_abs_first: 0.0,
            eta_abs_second: 0.0,
        }
    }

    #[test]
    fn zero_counts_give_zero() {
        let s = success_probabilities(0, 0, 10, 100.0).unwrap();
        assert_eq!(s.per_run_first, 0.0);
        assert_eq!(s.per_pair_second, 0.0);
        assert!(success_probabilities(1, 1, 0, 1.0).is_err());
        assert!(success_probabilities(1, 1, 1, 0.0).is_err());
    }

    #[test]
    fn unit_chain_is_identity() {
        let ones = EfficiencyChain {
            eta_854_a: 1.0,
            eta_854_b: 1.0,
            eta_393: 1.0,
            eta_gate: 1.0,
            ..chain()
        };
        assert_eq!(infer_absorption_efficiency(3.5e-7, &ones).unwrap(), 3.5e-7);
    }

    #[test]
    fn report_is_consistent() {
        let r = BudgetInputs::default().report(&chain()).unwrap();
        assert!((r.total_exposure_h - 49.75).abs() < 0.01);
        assert!((r.chain_product - 6.193e-4).abs() < 1e-6);
        assert!((r.herald_success_first - 1.71e-5).abs() < 0.01e-5);
        assert!((r.herald_success_second - 2.16e-6).abs() < 0.01e-6);
        assert!((r.mapping_efficiency - 8.4e-6).abs() < 0.05e-6);
    }
}
