//! Imperfection models: the SPDC resource state, accidental coincidences, detector
//! dark counts and magnetic-field dephasing of the atomic qubit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmath::{bell_state, BellState, DensityMatrix};

/// Photon-pair source. Only `werner_weight` and the pair rate enter the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceModel {
    pub werner_weight: f64,
    /// Pairs per second per mW of pump power.
    pub pair_rate_per_power: f64,
    pub pump_power_mw: f64,
    pub linewidth_a_hz: f64,
    pub detuning_b_hz: f64,
    pub fiber_pair_rate: f64,
}

impl Default for SourceModel {
    fn default() -> Self {
        Self {
            werner_weight: 0.8885,
            pair_rate_per_power: 5.17e4,
            pump_power_mw: 15.0,
            linewidth_a_hz: 12.29e6,
            detuning_b_hz: 480e6,
            fiber_pair_rate: 2.69e5,
        }
    }
}

impl SourceModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.werner_weight) {
            return Err(Error::InvalidParameter {
                name: "werner_weight",
                reason: format!("{} is outside [0, 1]", self.werner_weight),
            });
        }
        for (name, v) in [
            ("pair_rate_per_power", self.pair_rate_per_power),
            ("pump_power", self.pump_power_mw),
            ("fiber_pair_rate", self.fiber_pair_rate),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("{v} must be a non-negative number"),
                });
            }
        }
        Ok(())
    }

    /// Generated pairs per second.
    pub fn pair_rate(&self) -> f64 {
        self.pair_rate_per_power * self.pump_power_mw
    }

    /// 1/e decay time of the one-sided exponential wavepacket, `1/(2π·linewidth)`.
    pub fn wavepacket_decay_s(&self) -> f64 {
        1.0 / (std::f64::consts::TAU * self.linewidth_a_hz)
    }

    /// Fidelity of the source state to `Ψ⁻`.
    pub fn fidelity(&self) -> f64 {
        (1.0 + 3.0 * self.werner_weight) / 4.0
    }

    /// Purity implied by the Werner weight.
    pub fn purity(&self) -> f64 {
        (1.0 + 3.0 * self.werner_weight * self.werner_weight) / 4.0
    }
}

/// Werner weight whose state has the given fidelity to its Bell state.
pub fn werner_weight_for_fidelity(fidelity: f64) -> Result<f64> {
    let p = (4.0 * fidelity - 1.0) / 3.0;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter {
            name: "fidelity",
            reason: format!("{fidelity} is outside [1/4, 1]"),
        });
    }
    Ok(p)
}

/// `p|Ψ⁻⟩⟨Ψ⁻| + (1 − p)·1/4` on `(A ⊗ B)`.
pub fn source_density_matrix(m: &SourceModel) -> Result<DensityMatrix> {
    m.validate()?;
    let singlet = bell_state(BellState::PsiMinus).to_density()?;
    Ok(singlet.mix(&DensityMatrix::maximally_mixed(4), 1.0 - m.werner_weight))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DephasingKind {
    /// Gaussian-distributed phase with RMS growing linearly in time.
    #[default]
    GaussianPhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DephasingModel {
    pub kind: DephasingKind,
    /// RMS phase per second.
    pub sigma_rate: f64,
}

impl DephasingModel {
    pub fn new(sigma_rate: f64) -> Result<Self> {
        let m = Self {
            kind: DephasingKind::GaussianPhase,
            sigma_rate,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_rate >= 0.0 && self.sigma_rate.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "sigma_rate",
                reason: format!("{} must be a non-negative number", self.sigma_rate),
            });
        }
        Ok(())
    }

    /// `exp(−(σt)²/2)`
    pub fn coherence(&self, elapsed_s: f64) -> f64 {
        let x = self.sigma_rate * elapsed_s;
        (-0.5 * x * x).exp()
    }

    /// Mean coherence factor over herald times uniform in `[t0, t1]`.
    pub fn mean_coherence(&self, t0: f64, t1: f64) -> f64 {
        if t1 <= t0 {
            return self.coherence(t0);
        }
        // composite Simpson; the integrand is smooth and bounded by 1
        let n = 2000;
        let h = (t1 - t0) / n as f64;
        let mut acc = self.coherence(t0) + self.coherence(t1);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * self.coherence(t0 + k as f64 * h);
        }
        acc * h / 3.0 / (t1 - t0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackgroundModel {
    /// Probability that a registered coincidence is accidental.
    pub accidental_fraction: f64,
    /// Dark counts per second per 393 nm detector.
    pub dark_rate_393: f64,
    /// Dark counts per second per 854 nm detector.
    pub dark_rate_854: f64,
}

impl BackgroundModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.accidental_fraction) {
            return Err(Error::InvalidParameter {
                name: "accidental_fraction",
                reason: format!("{} is outside [0, 1)", self.accidental_fraction),
            });
        }
        for (name, v) in [
            ("dark_rate_393", self.dark_rate_393),
            ("dark_rate_854", self.dark_rate_854),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("{v} must be a non-negative number"),
                });
            }
        }
        Ok(())
    }
}

/// Multiplies the coherences of qubit `qubit` (0 = leftmost factor) by
/// `exp(−(σ·elapsed)²/2)`.
pub fn apply_dephasing(
    state: &DensityMatrix,
    elapsed_s: f64,
    m: &DephasingModel,
    qubit: usize,
) -> Result<DensityMatrix> {
    let dim = state.dim();
    if !dim.is_power_of_two() || dim < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: dim,
        });
    }
    let n_qubits = dim.trailing_zeros() as usize;
    if qubit >= n_qubits {
        return Err(Error::InvalidParameter {
            name: "qubit",
            reason: format!("index {qubit} for a {n_qubits}-qubit state"),
        });
    }
    m.validate()?;
    let bit = 1 << (n_qubits - 1 - qubit);
    let factor = m.coherence(elapsed_s);
    Ok(state.map_entries(|r, col, v| {
        if (r & bit) != (col & bit) {
            v * factor
        } else {
            v
        }
    }))
}

/// `(1 − f)·signal + f·1/dim`.
pub fn background_mixture(signal: &DensityMatrix, f: f64) -> Result<DensityMatrix> {
    if !(0.0..1.0).contains(&f) {
        return Err(Error::InvalidParameter {
            name: "accidental_fraction",
            reason: format!("{f} is outside [0, 1)"),
        });
    }
    Ok(signal.mix(&DensityMatrix::maximally_mixed(signal.dim()), f))
}

/// Dephasing rate whose `Ψ⁻` fidelity `(1 + c(t))/2` has dropped by
/// `−slope·horizon` at `t = horizon`.
pub fn calibrate_dephasing(slope: f64, horizon_s: f64) -> Result<DephasingModel> {
    if slope > 0.0 {
        return Err(Error::InvalidParameter {
            name: "slope",
            reason: format!("fidelity slope {slope} must not be positive"),
        });
    }
    if !(horizon_s > 0.0) {
        return Err(Error::InvalidParameter {
            name: "horizon",
            reason: "must be positive".into(),
        });
    }
    let coherence = 1.0 + 2.0 * slope * horizon_s;
    if coherence <= 0.0 {
        return Err(Error::Unphysical(format!(
            "a drop of {} exceeds the largest dephasing loss of 0.5",
            -slope * horizon_s
        )));
    }
    DephasingModel::new((-2.0 * coherence.ln()).sqrt() / horizon_s)
}

/// Geometry of a detection-window scan, for calibrating against its fitted slope.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanGeometry {
    pub offsets_s: Vec<f64>,
    pub window_s: f64,
    /// Weight of the coherence term in the fidelity, `F = const + w·c/2`:
    /// 1 for a pure Bell state, `p(1 − f)` for a Werner source with accidentals.
    pub coherence_weight: f64,
}

impl ScanGeometry {
    /// Least-squares slope of the predicted window fidelities over the offsets.
    pub fn predicted_slope(&self, m: &DephasingModel) -> f64 {
        let ys: Vec<f64> = self
            .offsets_s
            .iter()
            .map(|&t| 0.5 * self.coherence_weight * m.mean_coherence(t, t + self.window_s))
            .collect();
        linear_slope(&self.offsets_s, &ys)
    }
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn linear_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Finds the monotone root of `g(σ) = target` by bracketing and bisection,
/// where `g` decreases from `g(0)`.
fn solve_sigma(target: f64, g: impl Fn(f64) -> f64, what: &str) -> Result<DephasingModel> {
    let at_zero = g(0.0);
    if target >= at_zero - 1e-12 * (1.0 + target.abs()) {
        if target - at_zero <= 1e-9 * (1.0 + target.abs()) {
            return DephasingModel::new(0.0);
        }
        return Err(Error::InvalidParameter {
            name: "slope",
            reason: format!("{what} {target} is above the dephasing-free value {at_zero}"),
        });
    }
    let mut hi = 1.0;
    while g(hi) > target {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Unphysical(format!(
                "{what} {target} is not reachable by dephasing"
            )));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    DephasingModel::new(0.5 * (lo + hi))
}

/// Dephasing rate for which a window scan with `geometry` has fitted slope `slope`.
///
/// The predicted slope is not monotone in σ for very strong dephasing (the
/// series saturates), so the search runs on the branch starting at σ = 0.
pub fn calibrate_dephasing_scan(slope: f64, geometry: &ScanGeometry) -> Result<DephasingModel> {
    if slope > 0.0 {
        return Err(Error::InvalidParameter {
            name: "slope",
            reason: format!("fidelity slope {slope} must not be positive"),
        });
    }
    if geometry.offsets_s.len() < 2 || !(geometry.window_s > 0.0) {
        return Err(Error::InvalidParameter {
            name: "scan geometry",
            reason: "need at least two offsets and a positive window".into(),
        });
    }
    // Locate the most negative slope, then bisect on [0, σ*].
    let mut best = (0.0, 0.0);
    let span = geometry.offsets_s.iter().cloned().fold(0.0, f64::max) + geometry.window_s;
    for k in 1..=400 {
        let sigma = 10.0 * k as f64 / (400.0 * span);
        let s = geometry.predicted_slope(&DephasingModel::new(sigma)?);
        if s < best.1 {
            best = (sigma, s);
        }
    }
    if slope < best.1 {
        return Err(Error::Unphysical(format!(
            "slope {slope} is steeper than the largest achievable {}",
            best.1
        )));
    }
    let sigma_max = best.0;
    solve_sigma(
        slope,
        |s| geometry.predicted_slope(&DephasingModel::new(s.min(sigma_max)).expect("valid")),
        "slope",
    )
}

/// Accidental fraction implied by a fidelity measured with and without background
/// correction, assuming a polarization-white background on a `dim`-dimensional state.
pub fn accidental_fraction_from_gap(corrected: f64, uncorrected: f64, dim: usize) -> Result<f64> {
    let denom = corrected - 1.0 / dim as f64;
    if denom <= 0.0 {
        return Err(Error::ZeroDenominator(
            "corrected fidelity above the white-noise level",
        ));
    }
    let f = (corrected - uncorrected) / denom;
    if !(0.0..1.0).contains(&f) {
        return Err(Error::InvalidParameter {
            name: "fidelity gap",
            reason: format!("implied accidental fraction {f} is outside [0, 1)"),
        });
    }
    Ok(f)
}

/// Dephasing rate that reproduces the fidelity loss between an evaluation over
/// `[0, short_window]` and one over `[0, long_window]`.
pub fn dephasing_from_window_gap(
    fidelity_short: f64,
    fidelity_long: f64,
    short_window_s: f64,
    long_window_s: f64,
    coherence_weight: f64,
) -> Result<DephasingModel> {
    if !(short_window_s > 0.0 && long_window_s > short_window_s) {
        return Err(Error::InvalidParameter {
            name: "window",
            reason: "need 0 < short < long".into(),
        });
    }
    let gap = fidelity_short - fidelity_long;
    if gap < 0.0 {
        return Err(Error::InvalidParameter {
            name: "fidelity gap",
            reason: "later windows cannot have higher fidelity under dephasing".into(),
        });
    }
    let predicted_gap = |sigma: f64| {
        let m = DephasingModel::new(sigma).expect("non-negative");
        0.5 * coherence_weight
            * (m.mean_coherence(0.0, short_window_s) - m.mean_coherence(0.0, long_window_s))
    };
    // gap grows with σ up to a maximum; solve on the rising branch via −gap
    solve_sigma(-gap, |s| -predicted_gap(s), "fidelity gap")
}

/// Bell-state fidelity of a dephased Werner state with accidentals:
/// `F = (1 − f)(p(1 + c)/2 + (1 − p)/4) + f/4`.
pub fn predicted_bell_fidelity(
    werner_weight: f64,
    accidental_fraction: f64,
    coherence: f64,
) -> f64 {
    let p = werner_weight;
    let signal = p * (1.0 + coherence) / 2.0 + (1.0 - p) / 4.0;
    (1.0 - accidental_fraction) * signal + accidental_fraction / 4.0
}

/// Fidelities that pin the background and dephasing models: an evaluation
/// over the full exposure with and without background correction, and a
/// background-corrected evaluation over an early short window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapCalibration {
    pub corrected_fidelity: f64,
    pub uncorrected_fidelity: f64,
    pub short_window_fidelity: f64,
    pub short_window_s: f64,
    pub exposure_s: f64,
}

impl Default for GapCalibration {
    fn default() -> Self {
        Self {
            corrected_fidelity: 0.824,
            uncorrected_fidelity: 0.780,
            short_window_fidelity: 0.89,
            short_window_s: 50e-6,
            exposure_s: 350e-6,
        }
    }
}

impl GapCalibration {
    pub fn background(&self) -> Result<BackgroundModel> {
        let m = BackgroundModel {
            accidental_fraction: accidental_fraction_from_gap(
                self.corrected_fidelity,
                self.uncorrected_fidelity,
                4,
            )?,
            ..Default::default()
        };
        m.validate()?;
        Ok(m)
    }

    pub fn dephasing(&self, werner_weight: f64) -> Result<DephasingModel> {
        dephasing_from_window_gap(
            self.short_window_fidelity,
            self.corrected_fidelity,
            self.short_window_s,
            self.exposure_s,
            werner_weight,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{fidelity, purity, random};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn singlet() -> crate::qmath::StateVector {
        bell_state(BellState::PsiMinus)
    }

    #[test]
    fn source_examples() {
        let ideal = SourceModel {
            werner_weight: 1.0,
            ..Default::default()
        };
        let rho = source_density_matrix(&ideal).unwrap();
        assert!((fidelity(&rho, &singlet()).unwrap() - 1.0).abs() < 1e-12);
        assert!((purity(&rho) - 1.0).abs() < 1e-12);
        let rho = source_density_matrix(&SourceModel::default()).unwrap();
        assert!((fidelity(&rho, &singlet()).unwrap() - 0.9164).abs() < 5e-5);
        let white = SourceModel {
            werner_weight: 0.0,
            ..Default::default()
        };
        assert!((purity(&source_density_matrix(&white).unwrap()) - 0.25).abs() < 1e-12);
        assert!((SourceModel::default().pair_rate() - 775_500.0).abs() < 1e-6);
        let bad = SourceModel {
            werner_weight: 1.2,
            ..Default::default()
        };
        assert!(source_density_matrix(&bad).is_err());
        assert!((werner_weight_for_fidelity(0.9164).unwrap() - 0.8885333).abs() < 1e-6);
    }

    #[test]
    fn wavepacket_decay_time() {
        let tau = SourceModel::default().wavepacket_decay_s();
        assert!((tau - 12.95e-9).abs() < 0.01e-9);
    }

    #[test]
    fn dephasing_examples() {
        let rho = singlet().to_density().unwrap();
        let m = DephasingModel::new(2e3).unwrap();
        let same = apply_dephasing(&rho, 0.0, &m, 1).unwrap();
        assert_eq!(same, rho);
        let gone = apply_dephasing(&rho, 1.0, &m, 1).unwrap();
        assert!(gone.get(1, 2).norm() < 1e-300);
        for t in [10e-6, 100e-6, 300e-6] {
            let out = apply_dephasing(&rho, t, &m, 1).unwrap();
            let f = fidelity(&out, &singlet()).unwrap();
            assert!((f - (1.0 + m.coherence(t)) / 2.0).abs() < 1e-12);
            // dephasing either factor of a Bell state is equivalent
            let other = apply_dephasing(&rho, t, &m, 0).unwrap();
            assert!(other.trace_distance(&out) < 1e-12);
        }
        assert!(apply_dephasing(&rho, 1e-6, &m, 2).is_err());
        assert!(DephasingModel::new(-1.0).is_err());
    }

    #[test]
    fn werner_dephasing_closed_form() {
        let src = SourceModel::default();
        let rho = source_density_matrix(&src).unwrap();
        let m = DephasingModel::new(3e3).unwrap();
        let t = 200e-6;
        let out = apply_dephasing(&rho, t, &m, 1).unwrap();
        let f = fidelity(&out, &singlet()).unwrap();
        let expected = predicted_bell_fidelity(src.werner_weight, 0.0, m.coherence(t));
        assert!((f - expected).abs() < 1e-12);
    }

    #[test]
    fn calibration_examples() {
        assert_eq!(calibrate_dephasing(0.0, 300e-6).unwrap().sigma_rate, 0.0);
        let slope = -0.06 / 300e-6;
        let m = calibrate_dephasing(slope, 300e-6).unwrap();
        let drop = 1.0 - (1.0 + m.coherence(300e-6)) / 2.0;
        assert!((drop - 0.06).abs() < 1e-3);
        assert!((m.sigma_rate - 1685.5).abs() < 0.5);
        assert!(calibrate_dephasing(1.0, 300e-6).is_err());
        assert!(calibrate_dephasing(-1e4, 300e-6).is_err());
    }

    #[test]
    fn mean_coherence_matches_error_function_form() {
        // ∫₀ᵀ exp(−σ²t²/2) dt / T at σT = 1 equals √(π/2)·erf(1/√2) = 0.855624391892149
        let m = DephasingModel::new(1.0 / 350e-6).unwrap();
        assert!((m.mean_coherence(0.0, 350e-6) - 0.855_624_391_892_149).abs() < 1e-10);
    }

    #[test]
    fn scan_calibration_closes() {
        let geometry = ScanGeometry {
            offsets_s: (0..7).map(|k| k as f64 * 50e-6).collect(),
            window_s: 50e-6,
            coherence_weight: 0.8885,
        };
        let target = -150.0; // per second
        let m = calibrate_dephasing_scan(target, &geometry).unwrap();
        assert!((geometry.predicted_slope(&m) - target).abs() < 1e-6);
        assert_eq!(
            calibrate_dephasing_scan(0.0, &geometry).unwrap().sigma_rate,
            0.0
        );
        assert!(calibrate_dephasing_scan(-1e9, &geometry).is_err());
    }

    #[test]
    fn gap_helpers() {
        let f = accidental_fraction_from_gap(0.824, 0.780, 4).unwrap();
        assert!((f - 0.044 / 0.574).abs() < 1e-12);
        let m = dephasing_from_window_gap(0.89, 0.824, 50e-6, 350e-6, 0.8885).unwrap();
        let gap = 0.5 * 0.8885 * (m.mean_coherence(0.0, 50e-6) - m.mean_coherence(0.0, 350e-6));
        assert!((gap - 0.066).abs() < 1e-9);
        assert!(m.sigma_rate > 2.5e3 && m.sigma_rate < 3.5e3);
        assert!(dephasing_from_window_gap(0.8, 0.9, 50e-6, 350e-6, 1.0).is_err());
    }

    #[test]
    fn background_mixture_examples() {
        let rho = singlet().to_density().unwrap();
        assert_eq!(background_mixture(&rho, 0.0).unwrap(), rho);
        let almost = background_mixture(&rho, 1.0 - 1e-12).unwrap();
        assert!(almost.trace_distance(&DensityMatrix::maximally_mixed(4)) < 1e-11);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sig = random::density(4, &mut rng);
        let f0 = fidelity(&sig, &singlet()).unwrap();
        let mixed = background_mixture(&sig, 0.3).unwrap();
        let f1 = fidelity(&mixed, &singlet()).unwrap();
        assert!((f1 - (0.7 * f0 + 0.3 / 4.0)).abs() < 1e-12);
        assert!(background_mixture(&rho, 1.0).is_err());
    }
}
