//! Dense annealing Hamiltonians, instantaneous spectra, and closed and
//! open-system evolution.
//!
//! Internal units: ħ = 1, energies in rad/ns (quoted as GHz), times in ns.
//! Schedules carry their anneal time in µs.

pub mod bath;
pub mod closed;
mod frame;
pub mod open;
pub mod operator;
pub mod readout;
pub mod schedule;
pub mod spectrum;
pub mod state;

pub use bath::{bath_rate, principal_value_shift, BathSpec, CutoffMode, LambShiftTable};
pub use closed::{evolve_closed, ClosedOptions, Trajectory};
pub use open::{evolve_open, OpenOptions, OpenTrajectory, DEFAULT_OPEN_CAP};
pub use operator::{
    diagonal_from_terms, hamiltonian_at, hamiltonian_at_with_cap, ising_diagonal, transverse_plus_diagonal,
    DenseOperator, DEFAULT_HAMILTONIAN_CAP,
};
pub use readout::{sample_readout, success_probabilities, success_probabilities_with, trajectory_csv, SuccessProbabilities};
pub use schedule::{Coefficients, ConstantCoefficients};
pub use spectrum::{gap_profile, gap_profile_with_cap, spectrum, spectrum_of_matrix, GapProfile, LevelPolicy, Spectrum};
pub use state::{min_eigenvalue, QuantumState, C64};
