//! Per-sample decoding records.

use super::ground::{align_and_distance, ground_reference};
use super::majority::majority_decode;
use crate::error::{QacError, Result};
use crate::problem::{EncodedProblem, IsingProblem, Spin};
use crate::topology::LogicalEncoding;

/// Everything learned from one physical readout.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedRecord {
    pub logical_config: Vec<Spin>,
    /// The logical ground the decoded configuration was aligned to.
    pub matched_ground: Vec<Spin>,
    /// Problem qubits of each block differing from the matched ground value.
    pub per_block_error_weight: Vec<usize>,
    /// Whether each block's penalty qubit differs from the matched ground
    /// value; always false for blocks without one.
    pub penalty_flipped: Vec<bool>,
    pub d_physical: usize,
    pub d_logical: usize,
    pub decodable: bool,
    /// Physical Ising energy of the readout.
    pub energy: f64,
    /// Whether the readout is itself a physical ground configuration.
    pub is_physical_ground: bool,
}

/// Disagreements between a physical readout and the code state of `ground`,
/// penalty qubits included.
pub fn physical_hamming(sample: &[Spin], encoding: &LogicalEncoding, ground: &[Spin]) -> usize {
    encoding
        .blocks()
        .iter()
        .zip(ground)
        .map(|(block, &g)| block.qubits().filter(|&q| sample[q] != g).count())
        .sum()
}

/// Positions `i` where logical qubits `i − 1` and `i` differ in whether they
/// match `ground`; each marks a domain-wall boundary.
pub fn domain_wall_profile(decoded: &[Spin], ground: &[Spin], problem: &IsingProblem) -> Result<Vec<usize>> {
    if problem.chain_couplings().is_none() {
        return Err(QacError::Unsupported("domain walls are defined for chain problems only".into()));
    }
    if decoded.len() != problem.num_spins() || ground.len() != problem.num_spins() {
        return Err(QacError::input("configuration length does not match the chain"));
    }
    let correct: Vec<bool> = decoded.iter().zip(ground).map(|(a, b)| a == b).collect();
    Ok((1..correct.len()).filter(|&i| correct[i] != correct[i - 1]).collect())
}

/// Decodes readouts of one encoded problem against its logical ground set.
#[derive(Debug, Clone)]
pub struct Classifier {
    problem: EncodedProblem,
    layout: LogicalEncoding,
    grounds: Vec<Vec<Spin>>,
    ground_energy: f64,
    tolerance: f64,
}

impl Classifier {
    pub fn new(problem: &EncodedProblem) -> Result<Self> {
        let grounds = ground_reference(problem.logical())?;
        Classifier::with_grounds(problem, grounds)
    }

    /// Uses a caller-supplied logical ground set.
    pub fn with_grounds(problem: &EncodedProblem, grounds: Vec<Vec<Spin>>) -> Result<Self> {
        if grounds.is_empty() {
            return Err(QacError::input("ground set is empty"));
        }
        let layout = problem.readout_encoding();
        if layout.code_length() % 2 == 0 {
            return Err(QacError::Configuration("majority vote needs an odd code length".into()));
        }
        // Every copy of the logical problem and every penalty term is
        // minimized by a code state of a logical ground, so that code state
        // attains the physical ground energy.
        let ground_energy = problem.physical().energy(&problem.code_state(&grounds[0]))?;
        Ok(Classifier {
            problem: problem.clone(),
            layout,
            grounds,
            ground_energy,
            tolerance: 1e-9 * ground_energy.abs().max(1.0),
        })
    }

    pub fn grounds(&self) -> &[Vec<Spin>] {
        &self.grounds
    }

    pub fn ground_energy(&self) -> f64 {
        self.ground_energy
    }

    pub fn problem(&self) -> &EncodedProblem {
        &self.problem
    }

    pub fn layout(&self) -> &LogicalEncoding {
        &self.layout
    }

    pub fn is_physical_ground(&self, sample: &[Spin]) -> Result<bool> {
        Ok(self.problem.physical().energy(sample)? - self.ground_energy <= self.tolerance)
    }

    /// Whether the sample majority-decodes to a logical ground configuration.
    pub fn decodes_to_ground(&self, sample: &[Spin]) -> Result<bool> {
        let decoded = majority_decode(sample, &self.layout)?;
        Ok(self.grounds.iter().any(|g| *g == decoded.logical))
    }

    pub fn record(&self, sample: &[Spin]) -> Result<DecodedRecord> {
        let energy = self.problem.physical().energy(sample)?;
        let decoded = majority_decode(sample, &self.layout)?;
        let (ground, d_logical) = align_and_distance(&decoded.logical, &self.grounds);
        let blocks = self.layout.blocks();
        let per_block_error_weight = blocks
            .iter()
            .zip(ground)
            .map(|(b, &g)| b.problem.iter().filter(|&&q| sample[q] != g).count())
            .collect();
        let penalty_flipped = blocks
            .iter()
            .zip(ground)
            .map(|(b, &g)| b.penalty.is_some_and(|p| sample[p] != g))
            .collect();
        Ok(DecodedRecord {
            d_physical: physical_hamming(sample, &self.layout, ground),
            matched_ground: ground.to_vec(),
            logical_config: decoded.logical,
            per_block_error_weight,
            penalty_flipped,
            d_logical,
            decodable: d_logical == 0,
            energy,
            is_physical_ground: energy - self.ground_energy <= self.tolerance,
        })
    }
}
