//! Small dense helpers shared by the estimators.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::qmath::{pauli, Operator, Pauli, Tensor, C64};

/// `f` applied to the eigenvalues of a Hermitian matrix.
pub(crate) fn hermitian_map(m: &DMatrix<C64>, f: impl Fn(f64) -> f64) -> DMatrix<C64> {
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(f(l), 0.0)));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Pauli products on `n_qubits` qubits, index `Σ 4^(n−1−q) p_q` (leftmost most significant).
pub fn pauli_basis(n_qubits: usize) -> Vec<Operator> {
    let mut basis = vec![Operator::identity(1)];
    for _ in 0..n_qubits {
        basis = basis
            .iter()
            .flat_map(|b| Pauli::ALL.into_iter().map(move |p| b.tensor(&pauli(p))))
            .collect();
    }
    basis
}

/// Column-major entries of `Eᵀ`, for use with [`trace_product`].
pub(crate) fn flat_transpose(e: &DMatrix<C64>) -> Vec<C64> {
    e.transpose().iter().copied().collect::<Vec<_>>()
}

/// `Re tr(A B)` for `a = A` in column-major order and `bt = Bᵀ` in column-major order.
pub(crate) fn trace_product(a: &DMatrix<C64>, bt: &[C64]) -> f64 {
    a.iter().zip(bt).map(|(x, y)| (x * y).re).sum()
}

/// Numerical rank by singular values relative to the largest.
pub(crate) fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-9 * max).count()
}
