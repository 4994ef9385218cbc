//! Pure and mixed states over the computational basis.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{QacError, Result};

pub type C64 = Complex<f64>;

pub const NORM_TOLERANCE: f64 = 1e-9;
pub const TRACE_TOLERANCE: f64 = 1e-9;
pub const POSITIVITY_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Pure(DVector<C64>),
    Density(DMatrix<C64>),
}

impl QuantumState {
    /// Lowest eigenstate of `+Σσˣ`: every qubit in `|−⟩`.
    pub fn driver_ground(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        let amp = (dim as f64).powf(-0.5);
        QuantumState::Pure(DVector::from_fn(dim, |i, _| {
            let sign = if (i as u64).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            C64::new(sign * amp, 0.0)
        }))
    }

    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let mut v = DVector::zeros(1 << num_qubits);
        v[index] = C64::new(1.0, 0.0);
        QuantumState::Pure(v)
    }

    pub fn dim(&self) -> usize {
        match self {
            QuantumState::Pure(v) => v.len(),
            QuantumState::Density(m) => m.nrows(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    /// Checks the normalization, Hermiticity and positivity contracts.
    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(QacError::input(format!("state dimension {dim} is not a power of two")));
        }
        match self {
            QuantumState::Pure(v) => {
                let norm = v.norm();
                if (norm - 1.0).abs() > NORM_TOLERANCE {
                    return Err(QacError::input(format!("state norm is {norm}, expected 1")));
                }
            }
            QuantumState::Density(m) => {
                if m.ncols() != dim {
                    return Err(QacError::input("density matrix is not square"));
                }
                let herm = (m - m.adjoint()).camax();
                if herm > NORM_TOLERANCE {
                    return Err(QacError::input(format!("density matrix is not Hermitian (deviation {herm:e})")));
                }
                let tr = m.trace().re;
                if (tr - 1.0).abs() > TRACE_TOLERANCE {
                    return Err(QacError::input(format!("density matrix trace is {tr}, expected 1")));
                }
                let min = min_eigenvalue(m);
                if min < -POSITIVITY_TOLERANCE {
                    return Err(QacError::input(format!("density matrix has eigenvalue {min:e}")));
                }
            }
        }
        Ok(())
    }

    pub fn to_density(&self) -> DMatrix<C64> {
        match self {
            QuantumState::Pure(v) => v * v.adjoint(),
            QuantumState::Density(m) => m.clone(),
        }
    }

    /// Computational-basis populations.
    pub fn populations(&self) -> Vec<f64> {
        match self {
            QuantumState::Pure(v) => v.iter().map(|a| a.norm_sqr()).collect(),
            QuantumState::Density(m) => m.diagonal().iter().map(|a| a.re).collect(),
        }
    }

    /// Fidelity `⟨ψ|ρ|ψ⟩` with the pure state `psi`.
    pub fn fidelity_with_pure(&self, psi: &DVector<C64>) -> f64 {
        match self {
            QuantumState::Pure(v) => psi.dotc(v).norm_sqr(),
            QuantumState::Density(m) => psi.dotc(&(m * psi)).re,
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            QuantumState::Pure(v) => v.norm_squared(),
            QuantumState::Density(m) => m.trace().re,
        }
    }

    pub fn purity(&self) -> f64 {
        match self {
            QuantumState::Pure(v) => v.norm_squared().powi(2),
            QuantumState::Density(m) => m.iter().map(|z| z.norm_sqr()).sum(),
        }
    }
}

/// Smallest eigenvalue of a Hermitian matrix, through its real symmetric
/// embedding `[[Re, −Im], [Im, Re]]` (which doubles every eigenvalue's
/// multiplicity).
pub fn min_eigenvalue(m: &DMatrix<C64>) -> f64 {
    let (re, im) = split(m);
    min_eigenvalue_split(&re, &im)
}

pub(crate) fn min_eigenvalue_split(re: &DMatrix<f64>, im: &DMatrix<f64>) -> f64 {
    let n = re.nrows();
    let mut big = DMatrix::zeros(2 * n, 2 * n);
    big.view_mut((0, 0), (n, n)).copy_from(re);
    big.view_mut((n, n), (n, n)).copy_from(re);
    big.view_mut((n, 0), (n, n)).copy_from(im);
    big.view_mut((0, n), (n, n)).copy_from(&(-im));
    big.symmetric_eigenvalues().min()
}

pub(crate) fn split(m: &DMatrix<C64>) -> (DMatrix<f64>, DMatrix<f64>) {
    (m.map(|z| z.re), m.map(|z| z.im))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn driver_ground_is_uniform() {
        let s = QuantumState::driver_ground(3);
        s.validate().unwrap();
        assert!(s.populations().iter().all(|p| (p - 0.125).abs() < 1e-15));
    }

    #[test]
    fn validation() {
        let bad = QuantumState::Pure(DVector::from_element(2, C64::new(1.0, 0.0)));
        assert!(bad.validate().is_err());
        let mut m = DMatrix::from_element(2, 2, C64::new(0.5, 0.0));
        QuantumState::Density(m.clone()).validate().unwrap();
        m[(0, 1)] = C64::new(0.8, 0.0);
        m[(1, 0)] = C64::new(0.8, 0.0);
        // eigenvalues 0.5 ± 0.8
        assert!(QuantumState::Density(m).validate().is_err());
    }

    #[test]
    fn embedding_eigenvalue() {
        let m = DMatrix::from_row_slice(2, 2, &[C64::new(0.5, 0.0), C64::new(0.0, -0.5), C64::new(0.0, 0.5), C64::new(0.5, 0.0)]);
        assert!(min_eigenvalue(&m).abs() < 1e-14);
    }
}
