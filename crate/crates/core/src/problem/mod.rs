//! Logical Ising problems, their encodings, classical spectra and annealing
//! schedules.

mod encode;
mod gaps;
mod ising;
mod schedule;

pub use encode::{encode_problem, EncodedProblem, Strategy};
pub use gaps::{
    classical_excitation_gaps, classical_spectrum, ClassicalSpectrum, ExcitationLevel, FLOAT_LEVEL_TOLERANCE,
    MAX_BRUTE_FORCE_SPINS,
};
pub use ising::{index_from_spins, ising_energy, make_af_chain, spins_from_index, IsingProblem, Spin};
pub use schedule::{schedule_from_table, schedule_linear, AnnealSchedule, ENDPOINT_TOLERANCE};
