//! Single-qubit process tomography in the Choi representation.
//!
//! The Choi matrix `J = Σ χ_mn (I⊗σm)|Ω⟩⟨Ω|(I⊗σn)`, `|Ω⟩ = Σ|ii⟩`, acts on
//! input ⊗ output; an input `ρ` and output element `E` occur with probability
//! `tr[(ρᵀ⊗E) J]`, and trace preservation is `tr_out J = I`.

use nalgebra::{DMatrix, DVector};

use super::data::ProcessData;
use super::linalg::{flat_transpose, hermitian_map, numerical_rank, pauli_basis, trace_product};
use super::state_tomo::MlOptions;
use crate::error::{Error, Result};
use crate::qmath::{pauli, DensityMatrix, Operator, Pauli, Tensor, C64, PSD_TOL};

/// χ in the Pauli basis `{I, σx, σy, σz}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMatrix {
    chi: Operator,
}

fn omega_vectors() -> Vec<DVector<C64>> {
    let omega = DVector::from_vec(vec![
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(1.0, 0.0),
    ]);
    Pauli::ALL
        .iter()
        .map(|&p| Operator::identity(2).tensor(&pauli(p)).matrix() * &omega)
        .collect()
}

impl ProcessMatrix {
    pub fn from_chi(chi: Operator) -> Result<Self> {
        let pm = Self { chi };
        pm.validate()?;
        Ok(pm)
    }

    pub fn from_choi(choi: &DMatrix<C64>) -> Self {
        let v = omega_vectors();
        let chi = Operator::from_fn(4, 4, |m, n| v[m].dotc(&(choi * &v[n])) / C64::new(4.0, 0.0));
        Self { chi }
    }

    /// The process `ρ ↦ σ ρ σ†`.
    pub fn unitary_pauli(p: Pauli) -> Self {
        let k = p.index();
        Self {
            chi: Operator::from_fn(4, 4, |m, n| {
                if m == k && n == k {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
        }
    }

    pub fn chi(&self) -> &Operator {
        &self.chi
    }

    pub fn choi(&self) -> DMatrix<C64> {
        let v = omega_vectors();
        let mut j = DMatrix::<C64>::zeros(4, 4);
        for m in 0..4 {
            for n in 0..4 {
                j += &v[m] * v[n].adjoint() * self.chi.get(m, n);
            }
        }
        j
    }

    /// `χ_pp`, the process fidelity to the Pauli unitary `p`.
    pub fn pauli_weight(&self, p: Pauli) -> f64 {
        self.chi.get(p.index(), p.index()).re
    }

    pub fn diagonal(&self) -> [f64; 4] {
        std::array::from_fn(|k| self.chi.get(k, k).re)
    }

    pub fn apply(&self, rho: &DensityMatrix) -> DensityMatrix {
        let mut out = DMatrix::<C64>::zeros(2, 2);
        for m in Pauli::ALL {
            for n in Pauli::ALL {
                out += pauli(m).matrix()
                    * rho.matrix()
                    * pauli(n).matrix()
                    * self.chi.get(m.index(), n.index());
            }
        }
        DensityMatrix::new_unchecked(out)
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.chi.hermiticity_error();
        if herm > 1e-6 {
            return Err(Error::NotHermitian(herm));
        }
        let tr = self.chi.trace().re;
        if (tr - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidTrace(tr));
        }
        let min = self.chi.hermitian_eigenvalues()[0];
        if min < -1e-6 {
            return Err(Error::NotPositive(min));
        }
        Ok(())
    }
}

/// `(2χ₁₁ + 1)/3`, the input-averaged state fidelity of a qubit channel with
/// identity-process fidelity `χ₁₁`.
pub fn mean_overlap_fidelity(chi11: f64) -> f64 {
    (2.0 * chi11 + 1.0) / 3.0
}

struct Normalized {
    /// `ρᵀ ⊗ Ẽ` per observed cell.
    dense: Vec<DMatrix<C64>>,
    flat: Vec<Vec<C64>>,
    counts: Vec<f64>,
    freqs: Vec<f64>,
    total: f64,
}

fn normalize(data: &ProcessData) -> Result<Normalized> {
    let n_groups = data
        .measurements
        .iter()
        .map(|m| m.group + 1)
        .max()
        .unwrap_or(0);
    let mut trace = vec![0.0; n_groups];
    let mut totals = vec![0.0; n_groups];
    for m in &data.measurements {
        for (op, dim) in [(m.input.dim(), 2), (m.element.dim_out(), 2)] {
            if op != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: op,
                });
            }
        }
        trace[m.group] += m.element.trace().re;
        totals[m.group] += m.count;
    }
    let input_vectors: Vec<f64> = data
        .measurements
        .iter()
        .flat_map(|m| Pauli::ALL.map(|p| m.input.expectation(&pauli(p))))
        .collect();
    let inputs = DMatrix::from_row_slice(data.measurements.len(), 4, &input_vectors);
    let rank = numerical_rank(&inputs);
    if rank < 4 {
        return Err(Error::InsufficientInputSpan { rank });
    }
    let mut out = Normalized {
        dense: Vec::new(),
        flat: Vec::new(),
        counts: Vec::new(),
        freqs: Vec::new(),
        total: 0.0,
    };
    for m in &data.measurements {
        if totals[m.group] <= 0.0 || trace[m.group] <= 0.0 {
            continue;
        }
        let e = m.element.matrix() * C64::new(2.0 / trace[m.group], 0.0);
        let joint = m.input.matrix().transpose().kronecker(&e);
        out.flat.push(flat_transpose(&joint));
        out.dense.push(joint);
        out.counts.push(m.count);
        out.freqs.push(m.count / totals[m.group]);
        out.total += m.count;
    }
    if out.total <= 0.0 {
        return Err(Error::NoEvents);
    }
    Ok(out)
}

/// Linear process estimate over trace-preserving Choi matrices
/// `J = I/2 + ¼ Σ_{a, b≠0} c_ab σa⊗σb`.
pub fn linear_process_fit(data: &ProcessData) -> Result<(ProcessMatrix, bool)> {
    let norm = normalize(data)?;
    let basis = pauli_basis(2);
    let free: Vec<usize> = (0..16).filter(|k| k % 4 != 0).collect();
    let rows = norm.flat.len();
    let mut a = DMatrix::<f64>::zeros(rows, free.len());
    let base = DMatrix::<C64>::identity(4, 4) * C64::new(0.5, 0.0);
    let mut b = DVector::<f64>::zeros(rows);
    for (r, f) in norm.flat.iter().enumerate() {
        for (c, &k) in free.iter().enumerate() {
            a[(r, c)] = 0.25 * trace_product(basis[k].matrix(), f);
        }
        b[r] = norm.freqs[r] - trace_product(&base, f);
    }
    let rank = numerical_rank(&a);
    if rank < free.len() {
        return Err(Error::NotInformationallyComplete {
            rank,
            required: free.len(),
        });
    }
    let coef = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::Degenerate(e.to_string()))?;
    let mut j = base;
    for (c, &k) in free.iter().enumerate() {
        j += basis[k].matrix() * C64::new(0.25 * coef[c], 0.0);
    }
    let min = Operator::from_matrix(j.clone()).hermitian_eigenvalues()[0];
    Ok((ProcessMatrix::from_choi(&j), min >= PSD_TOL))
}

fn log_likelihood(j: &DMatrix<C64>, norm: &Normalized) -> Option<(f64, Vec<f64>)> {
    let probs: Vec<f64> = norm.flat.iter().map(|f| trace_product(j, f)).collect();
    let mut ll = 0.0;
    for (&p, &n) in probs.iter().zip(&norm.counts) {
        if n > 0.0 {
            if p <= 0.0 {
                return None;
            }
            ll += n * p.ln();
        }
    }
    Some((ll / norm.total, probs))
}

/// `tr_out` of a 4×4 input ⊗ output operator.
fn trace_output(m: &DMatrix<C64>) -> DMatrix<C64> {
    DMatrix::from_fn(2, 2, |i, k| m[(2 * i, 2 * k)] + m[(2 * i + 1, 2 * k + 1)])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessEstimate {
    pub process: ProcessMatrix,
    pub log_likelihood: f64,
    pub iterations: usize,
}

/// Completely positive, trace-preserving maximum-likelihood process by the
/// diluted fixed-point iteration on the Choi matrix.
pub fn ml_process_reconstruct(data: &ProcessData, opts: MlOptions) -> Result<ProcessEstimate> {
    let norm = normalize(data)?;
    let mixed = DMatrix::<C64>::identity(4, 4) * C64::new(0.5, 0.0);
    let mut j = match linear_process_fit(data) {
        Ok((pm, true)) => pm.choi(),
        Ok(_) => mixed.clone(),
        Err(e) => return Err(e),
    };
    let (mut ll, mut probs) = match log_likelihood(&j, &norm) {
        Some(v) => v,
        None => {
            j = mixed;
            log_likelihood(&j, &norm).ok_or_else(|| {
                Error::Degenerate("observed cells with zero-probability elements".into())
            })?
        }
    };
    let identity = DMatrix::<C64>::identity(4, 4);
    let mut eps = 1.0;
    let mut last_change = f64::INFINITY;
    for iteration in 1..=opts.max_iterations {
        let mut k = DMatrix::<C64>::zeros(4, 4);
        for ((e, &p), &n) in norm.dense.iter().zip(&probs).zip(&norm.counts) {
            if n > 0.0 {
                k += e * C64::new(n / (norm.total * p), 0.0);
            }
        }
        loop {
            let step = &identity + &k * C64::new(eps, 0.0);
            let raw = &step * &j * step.adjoint();
            let lambda_inv = hermitian_map(&trace_output(&raw), |l| 1.0 / l.max(1e-300).sqrt());
            let l = lambda_inv.kronecker(&DMatrix::<C64>::identity(2, 2));
            let mut next = &l * raw * &l;
            next = (&next + next.adjoint()) * C64::new(0.5, 0.0);
            match log_likelihood(&next, &norm) {
                Some((next_ll, next_probs)) if next_ll >= ll => {
                    last_change = next_ll - ll;
                    j = next;
                    ll = next_ll;
                    probs = next_probs;
                    break;
                }
                _ => {
                    eps *= 0.5;
                    if eps < 1e-12 {
                        last_change = 0.0;
                        break;
                    }
                }
            }
        }
        if last_change < opts.tolerance {
            return Ok(ProcessEstimate {
                process: ProcessMatrix::from_choi(&j),
                log_likelihood: ll,
                iterations: iteration,
            });
        }
        eps = (eps * 2.0).min(1e3);
    }
    Err(Error::NotConverged {
        iterations: opts.max_iterations,
        last_change,
    })
}

#[cfg(test)]
mod tests {
    use super::super::data::ProcessMeasurement;
    use super::*;
    use crate::qmath::StateVector;

    fn exact_data(process: &ProcessMatrix, n: f64) -> ProcessData {
        let inputs = [
            StateVector::from_real(&[1.0, 0.0]),
            StateVector::from_real(&[0.0, 1.0]),
            StateVector::from_real(&[1.0, 1.0]).normalized().unwrap(),
            StateVector::new(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)])
                .normalized()
                .unwrap(),
        ];
        let mut measurements = Vec::new();
        let mut group = 0;
        for psi in &inputs {
            let rho = DensityMatrix::from_pure(psi).unwrap();
            let out = process.apply(&rho);
            for p in [Pauli::X, Pauli::Y, Pauli::Z] {
                for s in [1.0, -1.0] {
                    let e = (&Operator::identity(2) + &pauli(p).scale(C64::new(s, 0.0)))
                        .scale(C64::new(0.5, 0.0));
                    measurements.push(ProcessMeasurement {
                        input: rho.clone(),
                        count: n * out.expectation(&e),
                        element: e,
                        group,
                    });
                }
                group += 1;
            }
        }
        ProcessData { measurements }
    }

    #[test]
    fn choi_round_trip() {
        let pm = ProcessMatrix::unitary_pauli(Pauli::Y);
        let back = ProcessMatrix::from_choi(&pm.choi());
        assert!(back.chi().max_abs_diff(pm.chi()) < 1e-14);
        assert!((trace_output(&pm.choi()) - DMatrix::<C64>::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn pauli_processes_are_recovered() {
        for p in Pauli::ALL {
            let truth = ProcessMatrix::unitary_pauli(p);
            let data = exact_data(&truth, 1e6);
            let est = ml_process_reconstruct(&data, MlOptions::default()).unwrap();
            assert!(
                est.process.pauli_weight(p) > 1.0 - 1e-6,
                "{p}: {:?}",
                est.process.diagonal()
            );
            est.process.validate().unwrap();
        }
    }

    #[test]
    fn depolarized_identity() {
        let truth = ProcessMatrix::from_chi(Operator::from_fn(4, 4, |m, n| {
            let v = if m != n {
                0.0
            } else if m == 0 {
                0.7
            } else {
                0.1
            };
            C64::new(v, 0.0)
        }))
        .unwrap();
        let data = exact_data(&truth, 1e6);
        let (lin, physical) = linear_process_fit(&data).unwrap();
        assert!(physical);
        assert!(lin.chi().max_abs_diff(truth.chi()) < 1e-9);
        let est = ml_process_reconstruct(&data, MlOptions::default()).unwrap();
        assert!(est.process.chi().max_abs_diff(truth.chi()) < 1e-5);
    }

    #[test]
    fn too_few_inputs() {
        let truth = ProcessMatrix::unitary_pauli(Pauli::I);
        let mut data = exact_data(&truth, 100.0);
        data.measurements.truncate(12);
        assert!(matches!(
            ml_process_reconstruct(&data, MlOptions::default()),
            Err(Error::InsufficientInputSpan { rank: 2 })
        ));
    }

    #[test]
    fn overlap_fidelity_formula() {
        assert_eq!(mean_overlap_fidelity(1.0), 1.0);
        assert_eq!(mean_overlap_fidelity(0.25), 0.5);
        assert!((mean_overlap_fidelity(0.962) - 0.97467).abs() < 1e-5);
    }
}
