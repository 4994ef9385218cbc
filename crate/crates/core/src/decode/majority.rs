//! Majority-vote decoding of repetition-code blocks.

use crate::error::{QacError, Result};
use crate::problem::Spin;
use crate::topology::LogicalEncoding;

/// Result of voting every block of a sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MajorityDecoded {
    /// Majority value of each block's problem qubits.
    pub logical: Vec<Spin>,
    /// Problem qubits disagreeing with their block's majority.
    pub minority_weights: Vec<usize>,
    /// Raw penalty qubit value of each block, if it has one.
    pub penalty_values: Vec<Option<Spin>>,
}

/// Votes each block over its problem qubits; penalty qubits never vote.
///
/// Blocks without a penalty qubit decode the same way. The code length must
/// be odd so that votes cannot tie.
pub fn majority_decode(sample: &[Spin], encoding: &LogicalEncoding) -> Result<MajorityDecoded> {
    let n = encoding.code_length();
    if n % 2 == 0 {
        return Err(QacError::Configuration(format!(
            "majority vote needs an odd code length, got {n}"
        )));
    }
    if sample.len() < encoding.num_physical() {
        return Err(QacError::input(format!(
            "sample has {} qubits, encoding uses {}",
            sample.len(),
            encoding.num_physical()
        )));
    }
    let blocks = encoding.blocks();
    let mut out = MajorityDecoded {
        logical: Vec::with_capacity(blocks.len()),
        minority_weights: Vec::with_capacity(blocks.len()),
        penalty_values: Vec::with_capacity(blocks.len()),
    };
    for block in blocks {
        let sum: i32 = block.problem.iter().map(|&q| i32::from(sample[q])).sum();
        let value: Spin = if sum > 0 { 1 } else { -1 };
        let minority = block.problem.iter().filter(|&&q| sample[q] != value).count();
        out.logical.push(value);
        out.minority_weights.push(minority);
        out.penalty_values.push(block.penalty.map(|p| sample[p]));
    }
    Ok(out)
}
