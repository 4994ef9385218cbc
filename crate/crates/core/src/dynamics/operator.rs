//! Dense Hamiltonians over the computational basis.
//!
//! Basis index bit `q` is the state of qubit `q` (0 ↔ σᶻ = +1). Transverse
//! field and Ising Hamiltonians are real in this basis, so operators are
//! stored as real symmetric matrices. Energies are angular frequencies in
//! GHz (rad/ns).

use nalgebra::DMatrix;

use super::schedule::Coefficients;
use crate::error::{QacError, Result};
use crate::problem::{EncodedProblem, IsingProblem};

/// Default qubit cap for dense Hamiltonians.
pub const DEFAULT_HAMILTONIAN_CAP: usize = 12;
/// Relative asymmetry tolerated by [`DenseOperator::from_matrix`].
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    num_qubits: usize,
    matrix: DMatrix<f64>,
}

impl DenseOperator {
    /// Wraps a square matrix of side `2^n` after checking it is symmetric to
    /// [`HERMITIAN_TOLERANCE`] relative to its largest entry.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let dim = matrix.nrows();
        if dim == 0 || matrix.ncols() != dim || !dim.is_power_of_two() {
            return Err(QacError::input(format!(
                "operator must be square with a power-of-two side, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        check_symmetric(&matrix)?;
        Ok(DenseOperator {
            num_qubits: dim.trailing_zeros() as usize,
            matrix,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().copied().collect()
    }
}

pub(crate) fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            if (m[(i, j)] - m[(j, i)]).abs() > HERMITIAN_TOLERANCE * scale {
                return Err(QacError::input(format!("operator is not Hermitian at ({i},{j})")));
            }
        }
    }
    Ok(())
}

/// Ising energy of every basis state.
pub fn ising_diagonal(problem: &IsingProblem) -> Vec<f64> {
    (0..1u64 << problem.num_spins()).map(|i| problem.energy_of_index(i)).collect()
}

/// Diagonal of `Σ f_q σᶻ_q + Σ c_ab σᶻ_a σᶻ_b` for unrestricted coefficients.
pub fn diagonal_from_terms(num_qubits: usize, fields: &[(usize, f64)], couplings: &[(usize, usize, f64)]) -> Vec<f64> {
    let z = |i: usize, q: usize| if i >> q & 1 == 1 { -1.0 } else { 1.0 };
    (0..1usize << num_qubits)
        .map(|i| {
            fields.iter().map(|&(q, f)| f * z(i, q)).sum::<f64>()
                + couplings.iter().map(|&(a, b, c)| c * z(i, a) * z(i, b)).sum::<f64>()
        })
        .collect()
}

/// `Σ_q x_q σˣ_q + diag(diagonal)`.
pub fn transverse_plus_diagonal(x: &[f64], diagonal: &[f64]) -> DMatrix<f64> {
    let dim = diagonal.len();
    debug_assert_eq!(dim, 1 << x.len());
    let mut h = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diagonal));
    for (q, &coef) in x.iter().enumerate() {
        if coef == 0.0 {
            continue;
        }
        for i in 0..dim {
            h[(i ^ (1 << q), i)] += coef;
        }
    }
    h
}

/// `A(s) Σ σˣ + B(s) H_phys` for the physical problem of `problem`, with the
/// default qubit cap.
pub fn hamiltonian_at(problem: &EncodedProblem, schedule: &dyn Coefficients, s: f64) -> Result<DenseOperator> {
    hamiltonian_at_with_cap(problem.physical(), schedule, s, DEFAULT_HAMILTONIAN_CAP)
}

pub fn hamiltonian_at_with_cap(
    physical: &IsingProblem,
    schedule: &dyn Coefficients,
    s: f64,
    cap: usize,
) -> Result<DenseOperator> {
    let n = physical.num_spins();
    check_cap(n, cap, "qubits for a dense Hamiltonian")?;
    let diag: Vec<f64> = ising_diagonal(physical).iter().map(|e| schedule.b(s) * e).collect();
    let x = vec![schedule.a(s); n];
    Ok(DenseOperator {
        num_qubits: n,
        matrix: transverse_plus_diagonal(&x, &diag),
    })
}

pub(crate) fn check_cap(n: usize, cap: usize, what: &'static str) -> Result<()> {
    if n > cap {
        return Err(QacError::Resource { what, requested: n, cap });
    }
    Ok(())
}
