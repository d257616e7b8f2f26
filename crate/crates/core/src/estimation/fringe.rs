//! Sinusoidal fringe fits over Larmor-phase bins.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::CountsTable;
use crate::protocol::{Passage, PhotonBasis};

/// `P(x) = (V/2) sin(x − φ₀) + ½`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub visibility: f64,
    /// In `[0, 2π)`.
    pub phi0: f64,
    pub n_bins: usize,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
}

impl FringeFit {
    /// Bloch components `(x, y)` of a qubit whose `+` probability follows
    /// `½ + ½(x cos φ − y sin φ)`.
    pub fn bloch_xy(&self) -> (f64, f64) {
        (
            -self.visibility * self.phi0.sin(),
            -self.visibility * self.phi0.cos(),
        )
    }
}

/// Attenuation of a unit fringe averaged over `N` equal phase bins, `(N/π) sin(π/N)`.
pub fn binning_attenuation(n_bins: usize) -> f64 {
    let n = n_bins as f64;
    n / PI * (PI / n).sin()
}

/// Centre phase of bin `k` of `N`.
pub fn bin_center(k: usize, n_bins: usize) -> f64 {
    (k as f64 + 0.5) * TAU / n_bins as f64
}

/// Least-squares fit of per-bin fractions (bin `k` centred on `(k+½)·2π/N`).
/// Non-finite entries mark empty bins and are skipped. With `correct_binning`
/// the model amplitude carries the bin-average attenuation, so the returned
/// visibility estimates the unbinned one.
pub fn fit_fringe(values: &[f64], correct_binning: bool) -> Result<FringeFit> {
    let n_bins = values.len();
    if n_bins < 4 {
        return Err(Error::InvalidParameter {
            name: "bins",
            reason: format!("fringe fit needs at least 4 bins, got {n_bins}"),
        });
    }
    let mut gram = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    let mut used = 0;
    for (k, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            continue;
        }
        let x = bin_center(k, n_bins);
        let row = Vector3::new(x.sin(), x.cos(), 1.0);
        gram += row * row.transpose();
        rhs += row * v;
        used += 1;
    }
    if used < 3 {
        return Err(Error::Degenerate(format!(
            "fringe fit over {used} populated bins"
        )));
    }
    let coef = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Degenerate("populated bins do not determine a fringe".into()))?;
    let residual = {
        let mut ss = 0.0;
        for (k, &v) in values.iter().enumerate() {
            if v.is_finite() {
                let x = bin_center(k, n_bins);
                let m = coef[0] * x.sin() + coef[1] * x.cos() + coef[2];
                ss += (v - m) * (v - m);
            }
        }
        (ss / used as f64).sqrt()
    };
    let scale = if correct_binning {
        binning_attenuation(n_bins)
    } else {
        1.0
    };
    // A sin x + B cos x with A = (V/2) cos φ₀, B = −(V/2) sin φ₀; the hypot is
    // never negative so V ≥ 0 holds without a separate tie-break
    let (a, b) = (coef[0] / scale, coef[1] / scale);
    let visibility = (2.0 * a.hypot(b)).min(1.0);
    let phi0 = if visibility == 0.0 {
        0.0
    } else {
        (-b).atan2(a).rem_euclid(TAU)
    };
    Ok(FringeFit {
        visibility,
        phi0,
        n_bins,
        residual,
    })
}

/// Fringe of the herald-corrected `+` superposition outcome for each photon
/// (basis, click) of `passage`. Settings with fewer than four populated bins
/// are skipped.
pub fn superposition_fringes(
    counts: &CountsTable,
    passage: Passage,
    correct_binning: bool,
) -> Vec<(PhotonBasis, u8, FringeFit)> {
    super::data::superposition_fractions(counts, passage)
        .into_iter()
        .filter_map(|((basis, click), fractions)| {
            fit_fringe(&fractions, correct_binning)
                .ok()
                .map(|fit| (basis, click, fit))
        })
        .collect()
}
