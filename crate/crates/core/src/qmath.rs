//! Dense complex linear algebra for one- and two-qubit states.
//!
//! Two-qubit spaces are always ordered as `(photon R/L) ⊗ (atom −/+)`, with the
//! left factor most significant:
//!
//! | index | photon | atom |
//! |-------|--------|------|
//! | 0     | R      | −    |
//! | 1     | R      | +    |
//! | 2     | L      | −    |
//! | 3     | L      | +    |
//!
//! Every sign in the protocol operators depends on this ordering.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance on the unit norm of a normalized state vector.
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance on Hermiticity and unit trace of a density matrix.
pub const DENSITY_TOL: f64 = 1e-10;
/// Smallest eigenvalue accepted for a density matrix.
pub const PSD_TOL: f64 = -1e-9;

pub(crate) const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) const ZERO: C64 = c(0.0, 0.0);
pub(crate) const ONE: C64 = c(1.0, 0.0);
pub(crate) const I: C64 = c(0.0, 1.0);

/// Kronecker product, left operand most significant.
pub trait Tensor {
    fn tensor(&self, other: &Self) -> Self;
}

pub fn tensor<T: Tensor>(a: &T, b: &T) -> T {
    a.tensor(b)
}

/// A ket. Not necessarily normalized: conditional (post-selected) states
/// carry their branch amplitude in the norm.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: DVector<C64>,
}

impl StateVector {
    pub fn new(amps: Vec<C64>) -> Self {
        Self {
            amps: DVector::from_vec(amps),
        }
    }

    pub fn from_real(amps: &[f64]) -> Self {
        Self::new(amps.iter().map(|&a| c(a, 0.0)).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Self::new(amps)
    }

    /// `a|0⟩ + b|1⟩`
    pub fn qubit(a: C64, b: C64) -> Self {
        Self::new(vec![a, b])
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.amps.as_slice()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }

    pub fn ensure_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::NotNormalized(self.norm_sqr()))
        }
    }

    /// Returns the normalized state, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm_sqr().sqrt();
        (n > 0.0).then(|| self.scale(c(1.0 / n, 0.0)))
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            amps: &self.amps * factor,
        }
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Self) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// `|self⟩⟨self|`
    pub fn projector(&self) -> Operator {
        Operator {
            m: &self.amps * self.amps.adjoint(),
        }
    }

    /// Pure-state density matrix of the normalized ket.
    pub fn to_density(&self) -> Result<DensityMatrix> {
        self.ensure_normalized()?;
        Ok(DensityMatrix {
            m: self.projector().m,
        })
    }

    /// `|⟨self|other⟩|²` for normalized vectors; insensitive to global phase.
    pub fn overlap(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// True when both vectors are equal up to a global phase.
    pub fn same_ray(&self, other: &Self, tol: f64) -> bool {
        let inner = self.inner(other);
        if inner.norm() == 0.0 {
            return self.norm_sqr() <= tol && other.norm_sqr() <= tol;
        }
        let phase = inner / inner.norm();
        self.amps
            .iter()
            .zip(other.amps.iter())
            .all(|(a, b)| (a * phase - b).norm() <= tol)
    }

    pub fn vector(&self) -> &DVector<C64> {
        &self.amps
    }
}

impl Tensor for StateVector {
    fn tensor(&self, other: &Self) -> Self {
        Self {
            amps: self.amps.kronecker(&other.amps),
        }
    }
}

/// A linear map between (possibly different) spaces, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    m: DMatrix<C64>,
}

impl Operator {
    pub fn from_matrix(m: DMatrix<C64>) -> Self {
        Self { m }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self {
            m: DMatrix::from_fn(rows, cols, f),
        }
    }

    /// Row-major entries.
    pub fn from_rows(rows: usize, cols: usize, entries: &[C64]) -> Self {
        assert_eq!(
            entries.len(),
            rows * cols,
            "entry count must equal rows × cols"
        );
        Self {
            m: DMatrix::from_row_slice(rows, cols, entries),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            m: DMatrix::zeros(rows, cols),
        }
    }

    /// `|ket⟩⟨bra|`
    pub fn outer(ket: &StateVector, bra: &StateVector) -> Self {
        Self {
            m: ket.vector() * bra.vector().adjoint(),
        }
    }

    pub fn dim_out(&self) -> usize {
        self.m.nrows()
    }

    pub fn dim_in(&self) -> usize {
        self.m.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.m[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            m: self.m.adjoint(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            m: self.m.transpose(),
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            m: &self.m * factor,
        }
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        if v.dim() != self.dim_in() {
            return Err(Error::DimensionMismatch {
                expected: self.dim_in(),
                found: v.dim(),
            });
        }
        Ok(StateVector {
            amps: &self.m * v.vector(),
        })
    }

    /// Row vector `⟨bra| self`, returned as the ket whose bra it is.
    pub fn bra_apply(&self, bra: &StateVector) -> Result<StateVector> {
        if bra.dim() != self.dim_out() {
            return Err(Error::DimensionMismatch {
                expected: self.dim_out(),
                found: bra.dim(),
            });
        }
        Ok(StateVector {
            amps: (bra.vector().adjoint() * &self.m).adjoint(),
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.m.shape(), other.m.shape());
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_error(&self) -> f64 {
        if self.dim_in() != self.dim_out() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// Eigenvalues of a Hermitian operator in ascending order.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.m.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

impl Tensor for Operator {
    fn tensor(&self, other: &Self) -> Self {
        Self {
            m: self.m.kronecker(&other.m),
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(
            self.dim_in(),
            rhs.dim_out(),
            "operator dimensions do not chain"
        );
        Operator {
            m: &self.m * &rhs.m,
        }
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator {
            m: &self.m + &rhs.m,
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator {
            m: &self.m - &rhs.m,
        }
    }
}

impl std::iter::Sum for Operator {
    fn sum<It: Iterator<Item = Operator>>(mut iter: It) -> Operator {
        let first = iter.next().expect("sum of an empty operator list");
        iter.fold(first, |acc, op| &acc + &op)
    }
}

/// Which factor of a two-qubit product space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subsystem {
    /// Left (most significant) factor; the photon in atom-photon states.
    First,
    /// Right factor; the atom in atom-photon states.
    Second,
}

impl FromStr for Subsystem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "first" | "a" | "photon" | "0" => Ok(Self::First),
            "second" | "b" | "atom" | "1" => Ok(Self::Second),
            _ => Err(Error::UnknownName {
                kind: "subsystem",
                name: s.to_owned(),
            }),
        }
    }
}

/// Hermitian, unit-trace, positive-semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity.
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        let rho = Self { m };
        rho.validate()?;
        Ok(rho)
    }

    /// Skips validation. Used for linear-inversion estimates, which are
    /// Hermitian and unit-trace by construction but may be slightly negative.
    pub fn new_unchecked(m: DMatrix<C64>) -> Self {
        Self { m }
    }

    pub fn from_pure(psi: &StateVector) -> Result<Self> {
        psi.to_density()
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim) / c(dim as f64, 0.0),
        }
    }

    /// Normalizes a nonzero positive operator by its trace.
    pub fn from_unnormalized(op: &Operator) -> Result<Self> {
        let tr = op.trace().re;
        if tr <= 0.0 {
            return Err(Error::InvalidTrace(tr));
        }
        Self::new(op.matrix() / c(tr, 0.0))
    }

    pub fn validate(&self) -> Result<()> {
        if !self.m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.m.nrows(),
                found: self.m.ncols(),
            });
        }
        let herm = self.as_operator().hermiticity_error();
        if herm > DENSITY_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = self.m.trace();
        if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let min = self.min_eigenvalue();
        if min < PSD_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.m[(row, col)]
    }

    pub fn as_operator(&self) -> Operator {
        Operator { m: self.m.clone() }
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.as_operator().hermitian_eigenvalues()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn is_positive(&self) -> bool {
        self.min_eigenvalue() >= PSD_TOL
    }

    /// `tr(op ρ)`, real part.
    pub fn expectation(&self, op: &Operator) -> f64 {
        (op.matrix() * &self.m).trace().re
    }

    /// `U ρ U†`
    pub fn conjugate(&self, u: &Operator) -> Self {
        Self {
            m: u.matrix() * &self.m * u.matrix().adjoint(),
        }
    }

    /// Convex combination `(1 − w) self + w other`.
    pub fn mix(&self, other: &Self, w: f64) -> Self {
        Self {
            m: &self.m * c(1.0 - w, 0.0) + &other.m * c(w, 0.0),
        }
    }

    /// `½ ‖self − other‖₁`
    pub fn trace_distance(&self, other: &Self) -> f64 {
        let diff = Operator {
            m: &self.m - &other.m,
        };
        0.5 * diff
            .hermitian_eigenvalues()
            .iter()
            .map(|e| e.abs())
            .sum::<f64>()
    }

    /// Elementwise complex map over `(row, col, value)`; callers must keep the result physical.
    pub(crate) fn map_entries(&self, mut f: impl FnMut(usize, usize, C64) -> C64) -> Self {
        let d = self.dim();
        Self {
            m: DMatrix::from_fn(d, d, |r, col| f(r, col, self.m[(r, col)])),
        }
    }
}

impl Tensor for DensityMatrix {
    fn tensor(&self, other: &Self) -> Self {
        Self {
            m: self.m.kronecker(&other.m),
        }
    }
}

/// `⟨ψ|ρ|ψ⟩` clamped to `[0, 1]`.
pub fn fidelity(rho: &DensityMatrix, psi: &StateVector) -> Result<f64> {
    if rho.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: psi.dim(),
        });
    }
    psi.ensure_normalized()?;
    let v = psi.vector();
    let f = (v.adjoint() * rho.matrix() * v)[(0, 0)];
    Ok(f.re.clamp(0.0, 1.0))
}

/// `tr(ρ²)`
pub fn purity(rho: &DensityMatrix) -> f64 {
    // tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ
    rho.matrix().iter().map(|z| z.norm_sqr()).sum()
}

/// Reduced state of one qubit of a two-qubit density matrix.
pub fn partial_trace(rho: &DensityMatrix, keep: Subsystem) -> Result<DensityMatrix> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho.dim(),
        });
    }
    let m = rho.matrix();
    let reduced = DMatrix::from_fn(2, 2, |i, j| match keep {
        Subsystem::First => (0..2).map(|k| m[(2 * i + k, 2 * j + k)]).sum(),
        Subsystem::Second => (0..2).map(|k| m[(2 * k + i, 2 * k + j)]).sum(),
    });
    Ok(DensityMatrix::new_unchecked(reduced))
}

/// Identity and Pauli operators, indexed 0..=3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Result<Self> {
        Self::ALL.get(index).copied().ok_or(Error::UnknownName {
            kind: "Pauli index",
            name: index.to_string(),
        })
    }

    pub fn label(self) -> &'static str {
        match self {
            Pauli::I => "I",
            Pauli::X => "X",
            Pauli::Y => "Y",
            Pauli::Z => "Z",
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub fn pauli(label: Pauli) -> Operator {
    let entries = match label {
        Pauli::I => [ONE, ZERO, ZERO, ONE],
        Pauli::X => [ZERO, ONE, ONE, ZERO],
        Pauli::Y => [ZERO, -I, I, ZERO],
        Pauli::Z => [ONE, ZERO, ZERO, -ONE],
    };
    Operator::from_rows(2, 2, &entries)
}

/// `σ_i ⊗ σ_j`
pub fn pauli_pair(first: Pauli, second: Pauli) -> Operator {
    pauli(first).tensor(&pauli(second))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BellState::PhiPlus => "phi+",
            BellState::PhiMinus => "phi-",
            BellState::PsiPlus => "psi+",
            BellState::PsiMinus => "psi-",
        }
    }
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BellState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .trim()
            .replace('Φ', "phi")
            .replace('Ψ', "psi")
            .replace('⁺', "+")
            .replace('⁻', "-")
            .to_ascii_lowercase();
        match norm.as_str() {
            "phi+" | "phiplus" | "phi_plus" => Ok(BellState::PhiPlus),
            "phi-" | "phiminus" | "phi_minus" => Ok(BellState::PhiMinus),
            "psi+" | "psiplus" | "psi_plus" => Ok(BellState::PsiPlus),
            "psi-" | "psiminus" | "psi_minus" => Ok(BellState::PsiMinus),
            _ => Err(Error::UnknownName {
                kind: "Bell state",
                name: s.to_owned(),
            }),
        }
    }
}

/// Bell states on `(photon R/L) ⊗ (atom −/+)`:
/// `Φ± = (|R,−⟩ ± |L,+⟩)/√2`, `Ψ± = (|R,+⟩ ± |L,−⟩)/√2`.
pub fn bell_state(which: BellState) -> StateVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let amps = match which {
        BellState::PhiPlus => [h, 0.0, 0.0, h],
        BellState::PhiMinus => [h, 0.0, 0.0, -h],
        BellState::PsiPlus => [0.0, h, h, 0.0],
        BellState::PsiMinus => [0.0, h, -h, 0.0],
    };
    StateVector::from_real(&amps)
}

/// Random states and unitaries for property tests and benchmarks.
pub mod random {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<C64> {
        DMatrix::from_fn(rows, cols, |_, _| {
            c(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    /// Haar-random unitary via QR of a Ginibre matrix with phase-fixed `R` diagonal.
    pub fn unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
        let qr = ginibre(dim, dim, rng).qr();
        let (q, r) = qr.unpack();
        let phases = DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                let d = r[(i, i)];
                if d.norm() > 0.0 {
                    d / d.norm()
                } else {
                    ONE
                }
            } else {
                ZERO
            }
        });
        Operator::from_matrix(q * phases)
    }

    /// Haar-random normalized pure state.
    pub fn state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
        let v = ginibre(dim, 1, rng);
        StateVector::new(v.iter().copied().collect())
            .normalized()
            .expect("Gaussian vector is almost surely nonzero")
    }

    /// Full-rank random density matrix `G G† / tr(G G†)`.
    pub fn density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
        let g = ginibre(dim, dim, rng);
        let m = &g * g.adjoint();
        let tr = m.trace().re;
        DensityMatrix::new_unchecked(m / c(tr, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn werner(p: f64) -> DensityMatrix {
        let psi = bell_state(BellState::PsiMinus).to_density().unwrap();
        psi.mix(&DensityMatrix::maximally_mixed(4), 1.0 - p)
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        let id4 = pauli(Pauli::I).tensor(&pauli(Pauli::I));
        assert_eq!(id4.max_abs_diff(&Operator::identity(4)), 0.0);
    }

    #[test]
    fn xx_flips_sign_of_singlet() {
        let xx = pauli_pair(Pauli::X, Pauli::X);
        let psi = bell_state(BellState::PsiMinus);
        let out = xx.apply(&psi).unwrap();
        let neg = psi.scale(-ONE);
        assert!(out
            .amplitudes()
            .iter()
            .zip(neg.amplitudes())
            .all(|(a, b)| (a - b).norm() < 1e-15));
    }

    #[test]
    fn basis_ordering_puts_r_minus_first() {
        let r = StateVector::basis(2, 0);
        let minus = StateVector::basis(2, 0);
        assert_eq!(r.tensor(&minus), StateVector::basis(4, 0));
        let l = StateVector::basis(2, 1);
        let plus = StateVector::basis(2, 1);
        assert_eq!(r.tensor(&plus), StateVector::basis(4, 1));
        assert_eq!(l.tensor(&minus), StateVector::basis(4, 2));
    }

    #[test]
    fn fidelity_examples() {
        let psi = bell_state(BellState::PsiMinus);
        let pure = psi.to_density().unwrap();
        assert!((fidelity(&pure, &psi).unwrap() - 1.0).abs() < 1e-12);
        let mixed = DensityMatrix::maximally_mixed(4);
        assert!((fidelity(&mixed, &psi).unwrap() - 0.25).abs() < 1e-12);
        let f = fidelity(&werner(0.8885), &psi).unwrap();
        assert!((f - 0.916375).abs() < 1e-12);
        assert!((f - 0.9164).abs() < 5e-5);
    }

    #[test]
    fn fidelity_rejects_dimension_mismatch() {
        let rho = DensityMatrix::maximally_mixed(2);
        let err = fidelity(&rho, &bell_state(BellState::PhiPlus)).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 2,
                found: 4
            }
        );
    }

    #[test]
    fn purity_examples() {
        let pure = bell_state(BellState::PsiMinus).to_density().unwrap();
        assert!((purity(&pure) - 1.0).abs() < 1e-12);
        assert!((purity(&DensityMatrix::maximally_mixed(4)) - 0.25).abs() < 1e-12);
        let p: f64 = 0.8885;
        let rho = werner(p);
        let closed = (1.0 + 3.0 * p * p) / 4.0;
        let squared = (rho.matrix() * rho.matrix()).trace().re;
        assert!((purity(&rho) - closed).abs() < 1e-12);
        assert!((squared - closed).abs() < 1e-12);
        assert!((closed - 0.8420).abs() < 1e-4);
    }

    #[test]
    fn partial_trace_examples() {
        let singlet = bell_state(BellState::PsiMinus).to_density().unwrap();
        let half = DensityMatrix::maximally_mixed(2);
        for keep in [Subsystem::First, Subsystem::Second] {
            let red = partial_trace(&singlet, keep).unwrap();
            assert!(red.trace_distance(&half) < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random::density(2, &mut rng);
        let b = random::density(2, &mut rng);
        let ab = a.tensor(&b);
        assert!(
            partial_trace(&ab, Subsystem::First)
                .unwrap()
                .trace_distance(&a)
                < 1e-12
        );
        assert!(
            partial_trace(&ab, Subsystem::Second)
                .unwrap()
                .trace_distance(&b)
                < 1e-12
        );
        assert!(partial_trace(&a, Subsystem::First).is_err());
        assert!("middle".parse::<Subsystem>().is_err());
    }

    #[test]
    fn bell_states_follow_the_fixed_ordering() {
        let phi_p = bell_state(BellState::PhiPlus);
        assert_eq!(
            phi_p,
            StateVector::from_real(&[SQRT_HALF, 0.0, 0.0, SQRT_HALF])
        );
        assert_eq!(phi_p.inner(&bell_state(BellState::PhiMinus)), ZERO);
        let completeness: Operator = BellState::ALL
            .iter()
            .map(|&b| bell_state(b).projector())
            .sum();
        assert!(completeness.max_abs_diff(&Operator::identity(4)) < 1e-15);
    }

    #[test]
    fn bell_gram_matrix_is_identity() {
        for (i, &a) in BellState::ALL.iter().enumerate() {
            for (j, &b) in BellState::ALL.iter().enumerate() {
                let g = bell_state(a).inner(&bell_state(b));
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((g - c(expected, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn bell_names_parse() {
        assert_eq!("Φ⁺".parse::<BellState>().unwrap(), BellState::PhiPlus);
        assert_eq!("psi-".parse::<BellState>().unwrap(), BellState::PsiMinus);
        assert_eq!("Psi_Plus".parse::<BellState>().unwrap(), BellState::PsiPlus);
        assert!("chi+".parse::<BellState>().is_err());
        assert!(Pauli::from_index(4).is_err());
    }

    #[test]
    fn density_validation_rejects_bad_matrices() {
        let not_herm =
            DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), ZERO, c(0.5, 0.0)]);
        assert!(matches!(
            DensityMatrix::new(not_herm),
            Err(Error::NotHermitian(_))
        ));
        let bad_trace = DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ONE]);
        assert!(matches!(
            DensityMatrix::new(bad_trace),
            Err(Error::InvalidTrace(_))
        ));
        let negative = DMatrix::from_row_slice(2, 2, &[c(1.2, 0.0), ZERO, ZERO, c(-0.2, 0.0)]);
        assert!(matches!(
            DensityMatrix::new(negative),
            Err(Error::NotPositive(_))
        ));
    }

    #[test]
    fn random_objects_are_physical() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in [2, 4] {
            let u = random::unitary(dim, &mut rng);
            let uu = &u.adjoint() * &u;
            assert!(uu.max_abs_diff(&Operator::identity(dim)) < 1e-12);
            assert!(random::state(dim, &mut rng).is_normalized());
            random::density(dim, &mut rng).validate().unwrap();
        }
    }
}
