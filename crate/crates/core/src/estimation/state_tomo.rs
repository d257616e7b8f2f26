//! Linear and maximum-likelihood state tomography.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::data::{superposition_fractions, ModelOptions, StateData};
use super::fringe::fit_fringe;
use super::linalg::{flat_transpose, numerical_rank, pauli_basis, trace_product};
use crate::error::{Error, Result};
use crate::montecarlo::binning::CountsTable;
use crate::montecarlo::events::{AtomicOutcome, ReadoutMode};
use crate::protocol::{Passage, PhotonBasis};
use crate::qmath::{BellState, DensityMatrix, C64, PSD_TOL};

/// Ideal photon-B ⊗ S-qubit state after entanglement transfer in a passage.
pub fn transfer_target(passage: Passage) -> BellState {
    match passage {
        Passage::First => BellState::PsiMinus,
        Passage::Second => BellState::PhiMinus,
    }
}

/// A reconstruction that is Hermitian with unit trace but possibly not positive.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEstimate {
    pub state: DensityMatrix,
    pub min_eigenvalue: f64,
    pub physical: bool,
}

impl LinearEstimate {
    fn new(m: DMatrix<C64>) -> Self {
        let state = DensityMatrix::new_unchecked(m);
        let min_eigenvalue = state.min_eigenvalue();
        Self {
            physical: min_eigenvalue >= PSD_TOL,
            min_eigenvalue,
            state,
        }
    }
}

/// `⟨σi⊗σj⟩` of a two-qubit state at index `4i + j`.
pub fn pauli_expectations(rho: &DensityMatrix) -> [f64; 16] {
    let mut out = [0.0; 16];
    for (k, p) in pauli_basis(2).iter().enumerate() {
        out[k] = rho.expectation(p);
    }
    out
}

/// `ρ = ¼ Σ ⟨σi⊗σj⟩ σi⊗σj`
pub fn linear_state_reconstruct(expectations: &[f64; 16]) -> LinearEstimate {
    let mut m = DMatrix::<C64>::zeros(4, 4);
    for (p, &e) in pauli_basis(2).iter().zip(expectations) {
        m += p.matrix() * C64::new(0.25 * e, 0.0);
    }
    LinearEstimate::new(m)
}

/// Photon-B ⊗ S-qubit Pauli expectations of an entanglement-transfer table.
///
/// Each photon basis `b` with click eigenvalue `λ_k` contributes
/// `⟨σ_b⊗σ_j⟩ = Σ_k λ_k P(k|b) ⟨σ_j⟩_{b,k}`, where the conditioned atomic
/// expectation comes from shelving for `σz` and from a fringe fit over the
/// Larmor-phase bins for `σx`, `σy`. Atom-only terms average over the photon
/// bases.
pub fn conditioned_expectations(
    counts: &CountsTable,
    passage: Passage,
    opts: ModelOptions,
) -> Result<[f64; 16]> {
    let fringes = superposition_fractions(counts, passage);
    let mut out = [0.0; 16];
    out[0] = 1.0;
    for basis in PhotonBasis::ALL {
        let i = basis.pauli().index();
        let mut n_click = [0.0; 2];
        let mut n_pop = [0.0; 2];
        let mut z_sum = [0.0; 2];
        let mut seen = [false; 2];
        for (k, &v) in counts.iter() {
            let s = k.setting;
            if s.passage != passage || s.basis != basis {
                continue;
            }
            let click = k.outcome.click as usize;
            n_click[click] += v;
            seen[match s.mode {
                ReadoutMode::Population => 0,
                ReadoutMode::Superposition => 1,
            }] = true;
            if s.mode == ReadoutMode::Population {
                n_pop[click] += v;
                z_sum[click] += if k.outcome.atomic == AtomicOutcome::Shelved0 {
                    v
                } else {
                    -v
                };
            }
        }
        if !seen[0] || !seen[1] {
            return Err(Error::MissingSetting(format!(
                "{passage} passage, photon basis {} needs population and superposition readouts",
                basis.label()
            )));
        }
        let total = n_click[0] + n_click[1];
        for click in 0..2u8 {
            let c = click as usize;
            let p = if total > 0.0 { n_click[c] / total } else { 0.0 };
            let lambda = PhotonBasis::eigenvalue(click);
            let z = if n_pop[c] > 0.0 {
                z_sum[c] / n_pop[c]
            } else {
                0.0
            };
            let (x, y) = match fringes.get(&(basis, click)) {
                Some(f) => match fit_fringe(f, opts.correct_binning) {
                    Ok(fit) => fit.bloch_xy(),
                    Err(_) => (0.0, 0.0),
                },
                None => (0.0, 0.0),
            };
            let atom = [1.0, x, y, z];
            for j in 0..4 {
                out[4 * i + j] += lambda * p * atom[j];
                if j > 0 {
                    out[j] += p * atom[j] / 3.0;
                }
            }
        }
    }
    Ok(out)
}

/// Elements of a data set normalized so that each group sums to the identity.
struct Normalized {
    dim: usize,
    /// `Ẽᵀ` flattened for each observed cell.
    elements: Vec<Vec<C64>>,
    dense: Vec<DMatrix<C64>>,
    counts: Vec<f64>,
    /// Observed frequency within its group.
    freqs: Vec<f64>,
    total: f64,
}

fn normalize(data: &StateData) -> Result<Normalized> {
    let d = data.dim;
    let n_groups = data.n_groups();
    let mut trace = vec![0.0; n_groups];
    let mut totals = vec![0.0; n_groups];
    for m in &data.measurements {
        if m.element.dim_out() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: m.element.dim_out(),
            });
        }
        trace[m.group] += m.element.trace().re;
        totals[m.group] += m.count;
    }
    let mut out = Normalized {
        dim: d,
        elements: Vec::new(),
        dense: Vec::new(),
        counts: Vec::new(),
        freqs: Vec::new(),
        total: 0.0,
    };
    for m in &data.measurements {
        if totals[m.group] <= 0.0 || trace[m.group] <= 0.0 {
            continue;
        }
        let e = m.element.matrix() * C64::new(d as f64 / trace[m.group], 0.0);
        out.elements.push(flat_transpose(&e));
        out.dense.push(e);
        out.counts.push(m.count);
        out.freqs.push(m.count / totals[m.group]);
        out.total += m.count;
    }
    if out.total <= 0.0 {
        return Err(Error::NoEvents);
    }
    Ok(out)
}

/// Least-squares inversion of group frequencies over the Pauli frame.
pub fn linear_state_fit(data: &StateData) -> Result<LinearEstimate> {
    let norm = normalize(data)?;
    let n_qubits = match norm.dim {
        2 => 1,
        4 => 2,
        d => {
            return Err(Error::DimensionMismatch {
                expected: 4,
                found: d,
            })
        }
    };
    let basis = pauli_basis(n_qubits);
    let d = norm.dim as f64;
    let rows = norm.elements.len();
    let cols = basis.len();
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    for (r, e) in norm.dense.iter().enumerate() {
        let et = flat_transpose(e);
        for (c, p) in basis.iter().enumerate() {
            a[(r, c)] = trace_product(p.matrix(), &et) / d;
        }
    }
    let rank = numerical_rank(&a);
    if rank < cols {
        return Err(Error::NotInformationallyComplete {
            rank,
            required: cols,
        });
    }
    // the identity coefficient is fixed at 1 by normalization
    let a_rest = a.columns(1, cols - 1).into_owned();
    let b = DVector::from_iterator(rows, (0..rows).map(|r| norm.freqs[r] - a[(r, 0)]));
    let coef = a_rest
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::Degenerate(e.to_string()))?;
    let mut m = basis[0].matrix() / C64::new(d, 0.0);
    for (k, p) in basis.iter().enumerate().skip(1) {
        m += p.matrix() * C64::new(coef[k - 1] / d, 0.0);
    }
    Ok(LinearEstimate::new(m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlOptions {
    /// Stop when an accepted step raises the mean log-likelihood per count by less than this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Keep the log-likelihood of every accepted iterate.
    pub record_trace: bool,
}

impl Default for MlOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 100_000,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlEstimate {
    pub state: DensityMatrix,
    /// Mean log-likelihood per count at the estimate.
    pub log_likelihood: f64,
    pub iterations: usize,
    /// Mean log-likelihood per count of the start and every accepted iterate.
    pub trace: Vec<f64>,
}

fn probabilities(rho: &DMatrix<C64>, norm: &Normalized) -> Vec<f64> {
    norm.elements
        .iter()
        .map(|e| trace_product(rho, e))
        .collect()
}

/// Mean log-likelihood per count; `None` if an observed cell has zero probability.
fn log_likelihood(probs: &[f64], norm: &Normalized) -> Option<f64> {
    let mut ll = 0.0;
    for (&p, &n) in probs.iter().zip(&norm.counts) {
        if n > 0.0 {
            if p <= 0.0 {
                return None;
            }
            ll += n * p.ln();
        }
    }
    Some(ll / norm.total)
}

/// Maximum-likelihood state under group-normalized multinomial statistics,
/// by the diluted `RρR` iteration.
pub fn ml_state_reconstruct(data: &StateData, opts: MlOptions) -> Result<MlEstimate> {
    let norm = normalize(data)?;
    let d = norm.dim;
    let mixed = DMatrix::<C64>::identity(d, d) / C64::new(d as f64, 0.0);
    let start = match linear_state_fit(data) {
        Ok(lin) if lin.physical => {
            let m = lin.state.matrix().clone();
            match log_likelihood(&probabilities(&m, &norm), &norm) {
                Some(_) => m,
                None => mixed.clone(),
            }
        }
        Ok(_) => mixed.clone(),
        Err(e) => return Err(e),
    };
    let mut rho = start;
    let mut probs = probabilities(&rho, &norm);
    let mut ll = match log_likelihood(&probs, &norm) {
        Some(v) => v,
        None => {
            rho = mixed;
            probs = probabilities(&rho, &norm);
            log_likelihood(&probs, &norm).ok_or_else(|| {
                Error::Degenerate("observed cells with zero-probability elements".into())
            })?
        }
    };
    let mut trace = if opts.record_trace {
        vec![ll]
    } else {
        Vec::new()
    };
    let identity = DMatrix::<C64>::identity(d, d);
    let mut eps = 1.0;
    let mut last_change = f64::INFINITY;
    for iteration in 1..=opts.max_iterations {
        let mut r = DMatrix::<C64>::zeros(d, d);
        for ((e, &p), &n) in norm.dense.iter().zip(&probs).zip(&norm.counts) {
            if n > 0.0 {
                r += e * C64::new(n / (norm.total * p), 0.0);
            }
        }
        loop {
            let step = &identity + &r * C64::new(eps, 0.0);
            let mut next = &step * &rho * step.adjoint();
            let tr = next.trace();
            next /= tr;
            next = (&next + next.adjoint()) * C64::new(0.5, 0.0);
            let next_probs = probabilities(&next, &norm);
            match log_likelihood(&next_probs, &norm) {
                Some(next_ll) if next_ll >= ll => {
                    last_change = next_ll - ll;
                    rho = next;
                    probs = next_probs;
                    ll = next_ll;
                    if opts.record_trace {
                        trace.push(ll);
                    }
                    break;
                }
                _ => {
                    eps *= 0.5;
                    if eps < 1e-12 {
                        // no ascent direction left at working precision
                        last_change = 0.0;
                        break;
                    }
                }
            }
        }
        if last_change < opts.tolerance {
            return Ok(MlEstimate {
                state: DensityMatrix::new_unchecked(rho),
                log_likelihood: ll,
                iterations: iteration,
                trace,
            });
        }
        eps = (eps * 2.0).min(1e3);
    }
    Err(Error::NotConverged {
        iterations: opts.max_iterations,
        last_change,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateMetrics {
    pub fidelity: f64,
    pub purity: f64,
}

pub fn state_metrics(rho: &DensityMatrix, target: BellState) -> Result<StateMetrics> {
    Ok(StateMetrics {
        fidelity: crate::qmath::fidelity(rho, &crate::qmath::bell_state(target))?,
        purity: crate::qmath::purity(rho),
    })
}
