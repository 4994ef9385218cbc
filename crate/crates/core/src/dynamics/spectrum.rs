//! Instantaneous spectra and minimum-gap profiles.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use super::operator::{check_symmetric, hamiltonian_at_with_cap, DenseOperator, DEFAULT_HAMILTONIAN_CAP};
use super::schedule::Coefficients;
use crate::error::{QacError, Result};
use crate::problem::EncodedProblem;

/// Lowest eigenpairs in ascending order; `vectors` holds one column per level.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn spectrum(op: &DenseOperator, levels: usize) -> Result<Spectrum> {
    spectrum_of_matrix(op.matrix(), levels)
}

/// As [`spectrum`] for a bare matrix, which is checked for symmetry first.
pub fn spectrum_of_matrix(m: &DMatrix<f64>, levels: usize) -> Result<Spectrum> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(QacError::input("spectrum needs a nonempty square matrix"));
    }
    check_symmetric(m)?;
    let (values, vectors) = sorted_eigen(m.clone());
    let k = if levels == 0 { values.len() } else { levels.min(values.len()) };
    Ok(Spectrum {
        values: values[..k].to_vec(),
        vectors: vectors.columns(0, k).into_owned(),
    })
}

pub(crate) fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<DVector<f64>>>());
    (values, vectors)
}

pub(crate) fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// How the gap's excited level is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevelPolicy {
    /// First level whose energy at `s = 1` exceeds the ground energy by more
    /// than `tolerance` (relative to `max(1, |ε₀(1)|)`), skipping the final
    /// ground manifold.
    SkipFinalGround { tolerance: f64 },
    /// A fixed level index `k ≥ 1`.
    Fixed(usize),
}

impl Default for LevelPolicy {
    fn default() -> Self {
        LevelPolicy::SkipFinalGround { tolerance: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapProfile {
    pub s: Vec<f64>,
    pub level: usize,
    pub gap: Vec<f64>,
    pub s_min: f64,
    pub delta_min: f64,
}

impl GapProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,gap\n");
        for (s, g) in self.s.iter().zip(&self.gap) {
            let _ = writeln!(out, "{s},{g}");
        }
        out
    }
}

/// Gap `ε_k(s) − ε₀(s)` on a uniform grid of `grid_points` values of `s`.
pub fn gap_profile(
    problem: &EncodedProblem,
    schedule: &dyn Coefficients,
    grid_points: usize,
    policy: LevelPolicy,
) -> Result<GapProfile> {
    gap_profile_with_cap(problem, schedule, grid_points, policy, DEFAULT_HAMILTONIAN_CAP)
}

pub fn gap_profile_with_cap(
    problem: &EncodedProblem,
    schedule: &dyn Coefficients,
    grid_points: usize,
    policy: LevelPolicy,
    cap: usize,
) -> Result<GapProfile> {
    if grid_points < 2 {
        return Err(QacError::input("gap profile needs at least two grid points"));
    }
    let physical = problem.physical();
    let level = match policy {
        LevelPolicy::Fixed(k) => k,
        LevelPolicy::SkipFinalGround { tolerance } => {
            let h1 = hamiltonian_at_with_cap(physical, schedule, 1.0, cap)?;
            let vals = sorted_eigenvalues(h1.into_matrix());
            let tol = tolerance * vals[0].abs().max(1.0);
            vals.iter()
                .position(|&e| e - vals[0] > tol)
                .ok_or_else(|| QacError::input("spectrum at s = 1 has no excited level"))?
        }
    };
    if level == 0 || level >= 1 << physical.num_spins() {
        return Err(QacError::input(format!("level index {level} out of range")));
    }
    let mut s_grid = Vec::with_capacity(grid_points);
    let mut gap = Vec::with_capacity(grid_points);
    for k in 0..grid_points {
        let s = k as f64 / (grid_points - 1) as f64;
        let h = hamiltonian_at_with_cap(physical, schedule, s, cap)?;
        let vals = sorted_eigenvalues(h.into_matrix());
        s_grid.push(s);
        gap.push((vals[level] - vals[0]).max(0.0));
    }
    let (imin, &delta_min) = gap
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is nonempty");
    Ok(GapProfile {
        s_min: s_grid[imin],
        s: s_grid,
        level,
        gap,
        delta_min,
    })
}
