//! Operator-level model of the heralded-absorption interface.
//!
//! Spaces and orderings:
//! - incoming 854 nm photon `R/L` ⊗ D-manifold qubit `−5/2 / +5/2`;
//! - outgoing 393 nm herald photon `R/L` ⊗ S-manifold qubit `−1/2 / +1/2`.
//!
//! The Raman operators are partial isometries from the first space to the second.
//! Herald and ground-state projections then turn absorption into either a
//! state mapping (herald only) or an eight-outcome Bell measurement (herald and
//! ground-state projection).

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmath::{
    bell_state, c, pauli, BellState, DensityMatrix, Operator, Pauli, StateVector, Tensor, C64, ONE,
    ZERO,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Passage {
    First,
    Second,
}

impl Passage {
    pub const ALL: [Passage; 2] = [Passage::First, Passage::Second];

    pub fn label(self) -> &'static str {
        match self {
            Passage::First => "first",
            Passage::Second => "second",
        }
    }
}

impl fmt::Display for Passage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Passage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" | "1" => Ok(Passage::First),
            "second" | "2" => Ok(Passage::Second),
            _ => Err(Error::UnknownName {
                kind: "passage",
                name: s.to_owned(),
            }),
        }
    }
}

/// Linear-polarization projection result of the 393 nm herald.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Herald {
    H,
    V,
}

impl Herald {
    pub const ALL: [Herald; 2] = [Herald::H, Herald::V];

    pub fn label(self) -> &'static str {
        match self {
            Herald::H => "H",
            Herald::V => "V",
        }
    }
}

impl FromStr for Herald {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H" => Ok(Herald::H),
            "V" => Ok(Herald::V),
            _ => Err(Error::UnknownName {
                kind: "herald",
                name: s.to_owned(),
            }),
        }
    }
}

/// Projection of the S-manifold qubit onto `|±⟩_S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AtomicProjection {
    Plus,
    Minus,
}

impl AtomicProjection {
    pub const ALL: [AtomicProjection; 2] = [AtomicProjection::Plus, AtomicProjection::Minus];

    pub fn flipped(self) -> Self {
        match self {
            AtomicProjection::Plus => AtomicProjection::Minus,
            AtomicProjection::Minus => AtomicProjection::Plus,
        }
    }
}

/// `|+⟩` / `|−⟩` are 1/√2 and 1/(i√2) combinations of `|R⟩, |L⟩`
/// (or `|−½⟩, |+½⟩`); the phase convention of the minus state matters for
/// the Bell-projection coefficients.
fn plus_minus_state(plus: bool) -> StateVector {
    let h = FRAC_1_SQRT_2;
    if plus {
        StateVector::qubit(c(h, 0.0), c(h, 0.0))
    } else {
        // (|0⟩ − |1⟩)/(i√2) = (−i|0⟩ + i|1⟩)/√2
        StateVector::qubit(c(0.0, -h), c(0.0, h))
    }
}

/// `|H⟩₃₉₃ = (|R⟩ + |L⟩)/√2`, `|V⟩₃₉₃ = (|R⟩ − |L⟩)/(i√2)`.
pub fn herald_state(h: Herald) -> StateVector {
    plus_minus_state(h == Herald::H)
}

pub fn herald_projector(h: Herald) -> Operator {
    herald_state(h).projector()
}

/// `|+⟩_S = (|−½⟩ + |+½⟩)/√2`, `|−⟩_S = (|−½⟩ − |+½⟩)/(i√2)`.
pub fn ground_state(a: AtomicProjection) -> StateVector {
    plus_minus_state(a == AtomicProjection::Plus)
}

pub fn ground_projector(a: AtomicProjection) -> Operator {
    ground_state(a).projector()
}

/// Raman scattering operator of one passage, mapping
/// `(red R/L) ⊗ (D −/+)` to `(blue R/L) ⊗ (S −/+)`.
///
/// First passage: `|R,−5/2⟩ → |L,−1/2⟩`, `|L,+5/2⟩ → |R,+1/2⟩`.
/// Second passage (counter-propagating): `|L,−5/2⟩ → |L,−1/2⟩`, `|R,+5/2⟩ → |R,+1/2⟩`.
pub fn raman_operator(passage: Passage) -> Operator {
    // index = 2·photon + atom, photon R=0 L=1, atom −=0 +=1
    let (minus_in, plus_in) = match passage {
        Passage::First => (0, 3),
        Passage::Second => (2, 1),
    };
    let mut m = DMatrix::from_element(4, 4, ZERO);
    m[(2, minus_in)] = ONE; // → |L⟩_b |−½⟩
    m[(1, plus_in)] = ONE; // → |R⟩_b |+½⟩
    Operator::from_matrix(m)
}

/// Symmetric D-manifold superposition `(|−5/2⟩ + e^{iφ}|+5/2⟩)/√2`.
pub fn d_superposition(phase: f64) -> StateVector {
    let h = FRAC_1_SQRT_2;
    StateVector::qubit(c(h, 0.0), C64::from_polar(h, phase))
}

/// Maps the photonic qubit `a|R⟩ + b|L⟩` onto the S-manifold qubit.
///
/// The D manifold starts in the symmetric superposition. The returned vector is
/// the herald-projected amplitude conditioned on absorption in `passage`, so
/// its squared norm is the herald probability (one half):
/// `(a|−½⟩ ± b|+½⟩)/√2` for the first passage and `(b|−½⟩ ± a|+½⟩)/√2` for the
/// second, `+` for an H herald, up to a global phase.
pub fn map_photon_to_atom(
    photon: &StateVector,
    passage: Passage,
    herald: Herald,
) -> Result<StateVector> {
    if photon.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: photon.dim(),
        });
    }
    photon.ensure_normalized()?;
    let joint = photon.tensor(&d_superposition(0.0));
    let scattered = raman_operator(passage).apply(&joint)?;
    let absorbed = scattered.norm_sqr();
    let kraus = herald_kraus(passage, herald, 1);
    let atom = kraus.apply(&joint)?;
    Ok(atom.scale(c(1.0 / absorbed.sqrt(), 0.0)))
}

/// One of the eight (passage, herald, ground-state) outcomes and the Bell state it projects onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BellOutcome {
    pub bell: BellState,
    pub passage: Passage,
    pub herald: Herald,
    pub atomic: AtomicProjection,
}

impl BellOutcome {
    /// The Bell state selected by a measurement: `Φ±` in the first passage, `Ψ±`
    /// in the second, `+` when herald and ground projection agree (H,+ or V,−).
    pub fn from_measurement(passage: Passage, herald: Herald, atomic: AtomicProjection) -> Self {
        let agree = matches!(
            (herald, atomic),
            (Herald::H, AtomicProjection::Plus) | (Herald::V, AtomicProjection::Minus)
        );
        let bell = match (passage, agree) {
            (Passage::First, true) => BellState::PhiPlus,
            (Passage::First, false) => BellState::PhiMinus,
            (Passage::Second, true) => BellState::PsiPlus,
            (Passage::Second, false) => BellState::PsiMinus,
        };
        Self {
            bell,
            passage,
            herald,
            atomic,
        }
    }

    pub fn new(
        bell: BellState,
        passage: Passage,
        herald: Herald,
        atomic: AtomicProjection,
    ) -> Result<Self> {
        let expected = Self::from_measurement(passage, herald, atomic);
        if expected.bell != bell {
            return Err(Error::InconsistentOutcome(format!(
                "({passage}, {}, {atomic:?}) projects onto {}, not {bell}",
                herald.label(),
                expected.bell
            )));
        }
        Ok(expected)
    }

    pub fn all() -> impl Iterator<Item = BellOutcome> {
        Passage::ALL.into_iter().flat_map(|p| {
            Herald::ALL.into_iter().flat_map(move |h| {
                AtomicProjection::ALL
                    .into_iter()
                    .map(move |a| BellOutcome::from_measurement(p, h, a))
            })
        })
    }
}

/// Row vector `(⟨h|⟨a|) R_p` on the `(red, D)` space, as the ket of its bra.
pub fn projected_raman_bra(outcome: &BellOutcome) -> StateVector {
    let bra = herald_state(outcome.herald).tensor(&ground_state(outcome.atomic));
    raman_operator(outcome.passage)
        .bra_apply(&bra)
        .expect("4-dim bra on 4-dim output")
}

/// Coefficient `c` in `(⟨h|⟨a|) R_p = c ⟨Bell|`.
pub fn projection_coefficient(outcome: &BellOutcome) -> C64 {
    // row · |Bell⟩ = c ⟨Bell|Bell⟩
    projected_raman_bra(outcome).inner(&bell_state(outcome.bell))
}

/// `R_p† (P_h ⊗ P_a) R_p`, which equals `½|Bell⟩⟨Bell|`.
pub fn bell_povm_element(outcome: &BellOutcome) -> Result<Operator> {
    let checked = BellOutcome::new(
        outcome.bell,
        outcome.passage,
        outcome.herald,
        outcome.atomic,
    )?;
    let r = raman_operator(checked.passage);
    let proj = herald_projector(checked.herald).tensor(&ground_projector(checked.atomic));
    Ok(&(&r.adjoint() * &proj) * &r)
}

/// `(⟨h| ⊗ 1_S ⊗ 1_rest)(R_p ⊗ 1_rest)`: from `(red ⊗ D ⊗ rest)` to `(S ⊗ rest)`.
pub fn herald_kraus(passage: Passage, herald: Herald, rest_dim: usize) -> Operator {
    let bra = herald_state(herald).adjoint_row();
    let project = bra.tensor(&Operator::identity(2 * rest_dim));
    let scatter = raman_operator(passage).tensor(&Operator::identity(rest_dim));
    &project * &scatter
}

/// `(⟨h|⟨a| ⊗ 1_rest)(R_p ⊗ 1_rest)`: from `(red ⊗ D ⊗ rest)` to `rest`.
pub fn bell_kraus(outcome: &BellOutcome, rest_dim: usize) -> Operator {
    let bra = herald_state(outcome.herald)
        .tensor(&ground_state(outcome.atomic))
        .adjoint_row();
    let project = bra.tensor(&Operator::identity(rest_dim));
    let scatter = raman_operator(outcome.passage).tensor(&Operator::identity(rest_dim));
    &project * &scatter
}

impl StateVector {
    /// The bra `⟨self|` as a 1×dim operator.
    pub fn adjoint_row(&self) -> Operator {
        Operator::from_fn(1, self.dim(), |_, j| self.amplitudes()[j].conj())
    }
}

/// Joint density matrix on `(A ⊗ D ⊗ B)` from a two-photon state on `(A ⊗ B)`
/// and a D-manifold state.
pub fn joint_with_atom(rho_ab: &DensityMatrix, rho_d: &DensityMatrix) -> DensityMatrix {
    DensityMatrix::new_unchecked(insert_atom(rho_ab.matrix(), rho_d.matrix()))
}

/// `X_AB ⊗ Y_D` reordered to `(A ⊗ D ⊗ B)`, for arbitrary 4×4 and 2×2 operators.
pub fn insert_atom(x_ab: &DMatrix<C64>, y_d: &DMatrix<C64>) -> DMatrix<C64> {
    assert_eq!(x_ab.shape(), (4, 4));
    assert_eq!(y_d.shape(), (2, 2));
    let split = |i: usize| (i / 4, (i / 2) % 2, i % 2);
    DMatrix::from_fn(8, 8, |r, col| {
        let (a, d, b) = split(r);
        let (a2, d2, b2) = split(col);
        x_ab[(2 * a + b, 2 * a2 + b2)] * y_d[(d, d2)]
    })
}

/// Exchanges the two factors of a 4×4 two-qubit operator.
pub fn swap_qubits(m: &DMatrix<C64>) -> DMatrix<C64> {
    let s = |i: usize| (i % 2) * 2 + i / 2;
    DMatrix::from_fn(4, 4, |r, col| m[(s(r), s(col))])
}

/// `K ρ K†` without normalization.
pub fn apply_kraus(k: &Operator, rho: &DensityMatrix) -> Operator {
    Operator::from_matrix(k.matrix() * rho.matrix() * k.matrix().adjoint())
}

/// One term of the teleportation decomposition of `|Ψ⁻⟩_AB ⊗ |φ⟩_D`.
#[derive(Debug, Clone, PartialEq)]
pub struct TeleportBranch {
    pub bell: BellState,
    /// Magnitude of the branch amplitude (one half for every branch).
    pub amplitude: f64,
    /// Normalized conditional state of photon B.
    pub photon_state: StateVector,
}

impl TeleportBranch {
    pub fn probability(&self) -> f64 {
        self.amplitude * self.amplitude
    }
}

/// Regroups `|Ψ⁻⟩_AB ⊗ (α|−5/2⟩ + β|+5/2⟩)` in the `(A, D)` Bell basis.
///
/// Branch states, up to global phase: `Ψ⁺ → α|R⟩ − β|L⟩`, `Ψ⁻ → α|R⟩ + β|L⟩`,
/// `Φ⁺ → β|R⟩ − α|L⟩`, `Φ⁻ → β|R⟩ + α|L⟩`.
pub fn teleport_decompose(input: &StateVector) -> Result<[TeleportBranch; 4]> {
    if input.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: input.dim(),
        });
    }
    input.ensure_normalized()?;
    let resource = bell_state(BellState::PsiMinus);
    // |Ψ⁻⟩_AB ⊗ |φ⟩_D reordered to (A, D, B)
    let ab_d = resource.tensor(input);
    let adb: Vec<C64> = (0..8)
        .map(|i| {
            let (a, d, b) = (i / 4, (i / 2) % 2, i % 2);
            ab_d.amplitudes()[4 * a + 2 * b + d]
        })
        .collect();
    let joint = StateVector::new(adb);
    let branch = |bell: BellState| -> Result<TeleportBranch> {
        let project = bell_state(bell)
            .adjoint_row()
            .tensor(&Operator::identity(2));
        let photon = project.apply(&joint)?;
        let amplitude = photon.norm_sqr().sqrt();
        let photon_state = photon
            .normalized()
            .ok_or_else(|| Error::Degenerate("zero teleportation branch".into()))?;
        Ok(TeleportBranch {
            bell,
            amplitude,
            photon_state,
        })
    };
    Ok([
        branch(BellState::PsiPlus)?,
        branch(BellState::PsiMinus)?,
        branch(BellState::PhiPlus)?,
        branch(BellState::PhiMinus)?,
    ])
}

/// Pauli operation on the target photon that restores the teleported state.
pub fn pauli_correction(bell: BellState) -> Pauli {
    match bell {
        BellState::PhiMinus => Pauli::X,
        BellState::PhiPlus => Pauli::Y,
        BellState::PsiMinus => Pauli::I,
        BellState::PsiPlus => Pauli::Z,
    }
}

pub fn apply_correction(bell: BellState, state: &StateVector) -> Result<StateVector> {
    pauli(pauli_correction(bell)).apply(state)
}

/// Photonic polarization states in the `R/L` basis.
///
/// `H`/`V` use the same convention as the 393 nm herald; `D = (H+V)/√2` and
/// `A = (H−V)/√2`. `HV`, `DA`, `RL` measure `σx`, `σy`, `σz` respectively, the
/// first-listed state being the `+1` eigenstate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl Polarization {
    pub const ALL: [Polarization; 6] = [
        Polarization::H,
        Polarization::D,
        Polarization::V,
        Polarization::A,
        Polarization::R,
        Polarization::L,
    ];

    pub fn state(self) -> StateVector {
        match self {
            Polarization::H => plus_minus_state(true),
            Polarization::V => plus_minus_state(false),
            Polarization::D => StateVector::qubit(c(0.5, -0.5), c(0.5, 0.5)),
            Polarization::A => StateVector::qubit(c(0.5, 0.5), c(0.5, -0.5)),
            Polarization::R => StateVector::qubit(c(1.0, 0.0), ZERO),
            Polarization::L => StateVector::qubit(ZERO, c(1.0, 0.0)),
        }
    }

    pub fn basis(self) -> PhotonBasis {
        match self {
            Polarization::H | Polarization::V => PhotonBasis::HV,
            Polarization::D | Polarization::A => PhotonBasis::DA,
            Polarization::R | Polarization::L => PhotonBasis::RL,
        }
    }

    /// 0 for the `+1` eigenstate of its basis, 1 otherwise.
    pub fn click(self) -> u8 {
        match self {
            Polarization::H | Polarization::D | Polarization::R => 0,
            _ => 1,
        }
    }

    pub fn from_basis_click(basis: PhotonBasis, click: u8) -> Self {
        match (basis, click) {
            (PhotonBasis::HV, 0) => Polarization::H,
            (PhotonBasis::HV, _) => Polarization::V,
            (PhotonBasis::DA, 0) => Polarization::D,
            (PhotonBasis::DA, _) => Polarization::A,
            (PhotonBasis::RL, 0) => Polarization::R,
            (PhotonBasis::RL, _) => Polarization::L,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PhotonBasis {
    HV,
    DA,
    RL,
}

impl PhotonBasis {
    pub const ALL: [PhotonBasis; 3] = [PhotonBasis::HV, PhotonBasis::DA, PhotonBasis::RL];

    pub fn pauli(self) -> Pauli {
        match self {
            PhotonBasis::HV => Pauli::X,
            PhotonBasis::DA => Pauli::Y,
            PhotonBasis::RL => Pauli::Z,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PhotonBasis::HV => "HV",
            PhotonBasis::DA => "DA",
            PhotonBasis::RL => "RL",
        }
    }

    /// Projector onto the detector-`click` eigenstate.
    pub fn projector(self, click: u8) -> Operator {
        Polarization::from_basis_click(self, click)
            .state()
            .projector()
    }

    /// Eigenvalue of the measured Pauli for detector `click`.
    pub fn eigenvalue(click: u8) -> f64 {
        if click == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl FromStr for PhotonBasis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "HV" => Ok(PhotonBasis::HV),
            "DA" => Ok(PhotonBasis::DA),
            "RL" => Ok(PhotonBasis::RL),
            _ => Err(Error::UnknownName {
                kind: "photon basis",
                name: s.to_owned(),
            }),
        }
    }
}

/// `diag(1, e^{iφ})`: Larmor rotation of a Zeeman qubit relative to the reference.
pub fn phase_rotation(phase: f64) -> Operator {
    Operator::from_rows(2, 2, &[ONE, ZERO, ZERO, C64::from_polar(1.0, phase)])
}

/// Readout element for the superposition basis (π/2 pulse then shelving) on a
/// qubit whose reconstructed frame lags the reference by `phase`:
/// `U(φ)† |±⟩⟨±| U(φ)`, so `P(+|φ) = ½ + ½(⟨σx⟩ cos φ − ⟨σy⟩ sin φ)`.
pub fn superposition_readout(outcome: AtomicProjection, phase: f64) -> Operator {
    superposition_readout_averaged(outcome, phase, 1.0)
}

/// Phase-bin average of [`superposition_readout`] over `[lo, hi)`. The
/// coherence term shrinks by `sin(w/2)/(w/2)`, `w = hi − lo`; for `N` equal bins
/// that is `(N/π) sin(π/N)`.
pub fn superposition_readout_binned(outcome: AtomicProjection, lo: f64, hi: f64) -> Operator {
    let half = 0.5 * (hi - lo);
    let shrink = if half.abs() < 1e-15 {
        1.0
    } else {
        half.sin() / half
    };
    superposition_readout_averaged(outcome, 0.5 * (lo + hi), shrink)
}

fn superposition_readout_averaged(outcome: AtomicProjection, phase: f64, shrink: f64) -> Operator {
    let sign = match outcome {
        AtomicProjection::Plus => 0.5,
        AtomicProjection::Minus => -0.5,
    };
    let off = C64::from_polar(sign * shrink, phase);
    Operator::from_rows(2, 2, &[c(0.5, 0.0), off, off.conj(), c(0.5, 0.0)])
}

/// Population readout by electron shelving: outcome 0 is `|−½⟩` (`σz = +1`).
pub fn population_readout(outcome: u8) -> Operator {
    let v = if outcome == 0 {
        [ONE, ZERO]
    } else {
        [ZERO, ONE]
    };
    StateVector::new(v.to_vec()).projector()
}

/// σz correction applied to the S qubit after a V herald in the mapping
/// configuration, which turns `a|−½⟩ − b|+½⟩` back into `a|−½⟩ + b|+½⟩`.
pub fn herald_correction(h: Herald) -> Pauli {
    match h {
        Herald::H => Pauli::I,
        Herald::V => Pauli::Z,
    }
}

/// Unitary mapping from the photonic qubit to the (herald-corrected) atomic qubit.
pub fn mapping_unitary(passage: Passage) -> Pauli {
    match passage {
        Passage::First => Pauli::I,
        Passage::Second => Pauli::X,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AtomicQubit {
    /// D₅/₂ Zeeman qubit.
    D,
    /// S₁/₂ Zeeman qubit.
    S,
}

/// Larmor precession parameters. Frequencies in Hz, durations in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LarmorConfig {
    pub freq_d_hz: f64,
    pub freq_s_hz: f64,
    /// Metadata only.
    pub b_field_gauss: f64,
    pub loop_period_s: f64,
}

impl Default for LarmorConfig {
    fn default() -> Self {
        Self {
            freq_d_hz: 24e6,
            freq_s_hz: 8e6,
            b_field_gauss: 2.855,
            loop_period_s: 500e-9,
        }
    }
}

impl LarmorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.loop_period_s > 0.0) {
            return Err(Error::InvalidParameter {
                name: "loop_period",
                reason: "must be positive".into(),
            });
        }
        if !(self.freq_d_hz > 0.0 && self.freq_s_hz > 0.0) {
            return Err(Error::InvalidParameter {
                name: "larmor frequency",
                reason: "must be positive".into(),
            });
        }
        Ok(())
    }

    pub fn frequency(&self, qubit: AtomicQubit) -> f64 {
        match qubit {
            AtomicQubit::D => self.freq_d_hz,
            AtomicQubit::S => self.freq_s_hz,
        }
    }

    /// True when the loop period holds an integer number of difference-frequency periods.
    pub fn loop_is_phase_aligned(&self) -> bool {
        let cycles = self.loop_period_s * (self.freq_d_hz - self.freq_s_hz);
        (cycles - cycles.round()).abs() < 1e-9 && cycles.round() >= 1.0
    }
}

fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// `2π f t mod 2π` for the chosen Zeeman qubit.
pub fn larmor_phase(t_s: f64, config: &LarmorConfig, qubit: AtomicQubit) -> f64 {
    assert!(t_s >= 0.0, "time must be non-negative");
    wrap_phase(TAU * config.frequency(qubit) * t_s)
}

/// Phase of the atomic superposition relative to the RF reference (which runs at
/// the S-qubit Larmor frequency) for an absorption herald at `t_s`.
pub fn event_phase(t_s: f64, config: &LarmorConfig) -> f64 {
    assert!(t_s >= 0.0, "time must be non-negative");
    wrap_phase(TAU * (config.freq_d_hz - config.freq_s_hz) * t_s)
}

/// Waiting times of the synchronized spin echo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinEchoSchedule {
    /// Preparation to absorption.
    pub tau_d_s: f64,
    /// π pulse to projection.
    pub tau_s_s: f64,
}

pub fn spin_echo_schedule(tau_d_s: f64, config: &LarmorConfig) -> Result<SpinEchoSchedule> {
    config.validate()?;
    let ratio = config.freq_d_hz / config.freq_s_hz;
    if (ratio - 3.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter {
            name: "larmor frequency ratio",
            reason: format!("spin echo requires f_D/f_S = 3, got {ratio}"),
        });
    }
    let loops = tau_d_s / config.loop_period_s;
    if !(loops.round() >= 1.0 && (loops - loops.round()).abs() < 1e-9) {
        return Err(Error::LoopMisaligned {
            duration_s: tau_d_s,
            period_s: config.loop_period_s,
        });
    }
    let tau_d_s = loops.round() * config.loop_period_s;
    Ok(SpinEchoSchedule {
        tau_d_s,
        tau_s_s: 3.0 * tau_d_s,
    })
}

/// Phase error bookkeeping across the echo for constant frequency offsets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoPhaseError {
    /// Accumulated in the D manifold before absorption.
    pub before_pulse: f64,
    /// Remaining after the π pulse and the S-manifold wait.
    pub after_echo: f64,
}

/// `delta_d_hz` acts during `τ_D`, `delta_s_hz` during `τ_S`; the π pulse inverts
/// the phase accumulated before it.
pub fn echo_phase_error(
    schedule: &SpinEchoSchedule,
    delta_d_hz: f64,
    delta_s_hz: f64,
) -> EchoPhaseError {
    let before = TAU * delta_d_hz * schedule.tau_d_s;
    EchoPhaseError {
        before_pulse: before,
        after_echo: -before + TAU * delta_s_hz * schedule.tau_s_s,
    }
}
