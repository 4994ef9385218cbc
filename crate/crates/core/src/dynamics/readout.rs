//! Computational-basis readout of evolved states.

use std::fmt::Write as _;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::closed::{HamiltonianParts, Trajectory};
use super::schedule::Coefficients;
use super::spectrum::sorted_eigenvalues;
use super::state::QuantumState;
use crate::decode::{Classifier, SampleRecord, SampleSet};
use crate::error::{QacError, Result};
use crate::problem::{spins_from_index, EncodedProblem};

/// Populations below this are skipped when classifying.
const NEGLIGIBLE: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessProbabilities {
    /// Population on physical ground configurations.
    pub p_gs: f64,
    /// Population on configurations that majority-decode to a logical ground.
    pub p_s: f64,
}

pub fn success_probabilities(state: &QuantumState, problem: &EncodedProblem) -> Result<SuccessProbabilities> {
    success_probabilities_with(state, &Classifier::new(problem)?)
}

pub fn success_probabilities_with(state: &QuantumState, classifier: &Classifier) -> Result<SuccessProbabilities> {
    let n = classifier.problem().num_physical();
    if state.dim() != 1 << n {
        return Err(QacError::input(format!(
            "state dimension {} does not match {n} physical qubits",
            state.dim()
        )));
    }
    let (mut p_gs, mut p_s) = (0.0, 0.0);
    for (i, &p) in state.populations().iter().enumerate() {
        if p.abs() <= NEGLIGIBLE {
            continue;
        }
        let spins = spins_from_index(i as u64, n);
        if classifier.is_physical_ground(&spins)? {
            p_gs += p;
        }
        if classifier.decodes_to_ground(&spins)? {
            p_s += p;
        }
    }
    Ok(SuccessProbabilities { p_gs, p_s })
}

/// `shots` independent computational-basis measurements, aggregated by
/// configuration in ascending basis order under `embedding_id` 0.
pub fn sample_readout(state: &QuantumState, shots: u64, seed: u64) -> Result<SampleSet> {
    if shots == 0 {
        return Err(QacError::input("shots must be at least 1"));
    }
    let weights: Vec<f64> = state.populations().iter().map(|p| p.max(0.0)).collect();
    let dist = WeightedIndex::new(&weights).map_err(|e| QacError::input(format!("invalid populations: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; weights.len()];
    for _ in 0..shots {
        counts[dist.sample(&mut rng)] += 1;
    }
    let n = state.num_qubits();
    let mut set = SampleSet::new(n);
    for (i, &c) in counts.iter().enumerate().filter(|(_, &c)| c > 0) {
        set.push(SampleRecord {
            embedding_id: 0,
            count: c,
            bits: spins_from_index(i as u64, n),
        })?;
    }
    Ok(set)
}

/// CSV `s,trace,purity,P_GS,P_S,gap_1..gap_k` over the recorded points, with
/// `gap_j = ε_j(s) − ε₀(s)` of the instantaneous Hamiltonian.
pub fn trajectory_csv(
    trajectory: &Trajectory,
    problem: &EncodedProblem,
    schedule: &dyn Coefficients,
    gaps: usize,
) -> Result<String> {
    let classifier = Classifier::new(problem)?;
    let parts = HamiltonianParts::new(problem.physical(), usize::MAX)?;
    let gaps = gaps.min(parts.diag.len() - 1);
    let mut out = String::from("s,trace,purity,P_GS,P_S");
    for j in 1..=gaps {
        let _ = write!(out, ",gap_{j}");
    }
    out.push('\n');
    for (s, state) in &trajectory.points {
        let sp = success_probabilities_with(state, &classifier)?;
        let _ = write!(out, "{s},{},{},{},{}", state.trace(), state.purity(), sp.p_gs, sp.p_s);
        if gaps > 0 {
            let e = sorted_eigenvalues(parts.combine(schedule.a(*s), schedule.b(*s)));
            for j in 1..=gaps {
                let _ = write!(out, ",{}", e[j] - e[0]);
            }
        }
        out.push('\n');
    }
    Ok(out)
}
