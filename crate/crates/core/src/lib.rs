//! Simulation and analysis toolkit for quantum annealing correction: Ising
//! problems encoded into penalized repetition codes on Chimera graphs,
//! closed and open-system annealing dynamics, majority-vote decoding, a
//! classical kink model, and perturbative gap formulas.

pub mod classical;
pub mod decode;
pub mod dynamics;
pub mod error;
pub mod perturb;
pub mod problem;
pub mod topology;

pub use error::{QacError, Result};
