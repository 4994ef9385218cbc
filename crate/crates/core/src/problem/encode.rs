//! The four benchmarking strategies and their physical Hamiltonians.

use std::fmt;
use std::str::FromStr;

use super::ising::IsingProblem;
use crate::error::{QacError, Result};
use crate::topology::LogicalEncoding;

/// How a logical problem is placed on physical qubits and read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    /// One physical qubit per logical qubit, scaled by α.
    Unencoded,
    /// Three unpenalized copies, majority-vote decoded.
    Classical,
    /// Three copies plus a penalty qubit per block, read without decoding.
    EnergyPenalty,
    /// Energy penalty followed by majority-vote decoding.
    Qac,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Unencoded,
        Strategy::Classical,
        Strategy::EnergyPenalty,
        Strategy::Qac,
    ];

    pub fn has_penalty(self) -> bool {
        matches!(self, Strategy::EnergyPenalty | Strategy::Qac)
    }

    /// Whether success is judged after majority-vote decoding.
    pub fn decodes(self) -> bool {
        matches!(self, Strategy::Classical | Strategy::Qac)
    }

    /// Compact layout used for desk-scale simulation: no encoding for U,
    /// three-qubit blocks otherwise, with a trailing penalty qubit for EP and
    /// QAC.
    pub fn compact_encoding(self, num_logical: usize) -> Result<Option<LogicalEncoding>> {
        match self {
            Strategy::Unencoded => Ok(None),
            s => LogicalEncoding::compact(num_logical, 3, s.has_penalty()).map(Some),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Unencoded => "U",
            Strategy::Classical => "C",
            Strategy::EnergyPenalty => "EP",
            Strategy::Qac => "QAC",
        })
    }
}

impl FromStr for Strategy {
    type Err = QacError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "U" => Ok(Strategy::Unencoded),
            "C" => Ok(Strategy::Classical),
            "EP" => Ok(Strategy::EnergyPenalty),
            "QAC" => Ok(Strategy::Qac),
            _ => Err(QacError::input(format!("unknown strategy `{s}` (expected U, C, EP or QAC)"))),
        }
    }
}

/// A logical problem together with its physical realization.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedProblem {
    strategy: Strategy,
    logical: IsingProblem,
    encoding: Option<LogicalEncoding>,
    alpha: f64,
    beta: f64,
    physical: IsingProblem,
}

/// Builds the physical problem for `strategy`.
///
/// Every logical field `h_i` becomes `α·h_i` on each problem qubit of block
/// `i`; every logical coupling `J_ij` becomes `α·J_ij` between the `k`-th
/// problem qubits of blocks `i` and `j`; every block with a penalty qubit
/// adds `−β` between the penalty qubit and each of its problem qubits. The
/// unencoded strategy ignores `encoding` and uses `α` times the logical
/// problem. For the classical strategy any penalty qubits of `encoding` are
/// dropped.
pub fn encode_problem(
    logical: &IsingProblem,
    strategy: Strategy,
    alpha: f64,
    beta: f64,
    encoding: Option<&LogicalEncoding>,
) -> Result<EncodedProblem> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(QacError::input(format!("alpha {alpha} outside (0, 1]")));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(QacError::input(format!("beta {beta} outside [0, 1]")));
    }
    if !strategy.has_penalty() && beta != 0.0 {
        return Err(QacError::input(format!("strategy {strategy} takes no penalty, got beta {beta}")));
    }

    let (encoding, physical) = match strategy {
        Strategy::Unencoded => (None, logical.scaled(alpha)?),
        _ => {
            let encoding = encoding
                .ok_or_else(|| QacError::input(format!("strategy {strategy} needs an encoding")))?;
            let encoding = if strategy.has_penalty() {
                encoding.clone()
            } else {
                let blocks = encoding
                    .blocks()
                    .iter()
                    .map(|b| crate::topology::Block { problem: b.problem.clone(), penalty: None })
                    .collect();
                LogicalEncoding::new(encoding.code_length(), blocks)?
            };
            let physical = realize(logical, &encoding, alpha, beta)?;
            (Some(encoding), physical)
        }
    };
    Ok(EncodedProblem {
        strategy,
        logical: logical.clone(),
        encoding,
        alpha,
        beta,
        physical,
    })
}

fn realize(logical: &IsingProblem, encoding: &LogicalEncoding, alpha: f64, beta: f64) -> Result<IsingProblem> {
    let blocks = encoding.blocks();
    if blocks.len() < logical.num_spins() {
        return Err(QacError::input(format!("logical spin {} has no block", blocks.len())));
    }
    let mut physical = IsingProblem::new(encoding.num_physical());
    for (i, h) in logical.fields() {
        for &q in &blocks[i].problem {
            physical.set_field(q, alpha * h)?;
        }
    }
    for ((i, j), v) in logical.couplings() {
        for (&a, &b) in blocks[i].problem.iter().zip(&blocks[j].problem) {
            physical.set_coupling(a, b, alpha * v)?;
        }
    }
    for block in &blocks[..logical.num_spins()] {
        if let Some(p) = block.penalty {
            for &q in &block.problem {
                physical.set_coupling(q, p, -beta)?;
            }
        }
    }
    Ok(physical)
}

impl EncodedProblem {
    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn logical(&self) -> &IsingProblem {
        &self.logical
    }

    /// The block layout; `None` for the unencoded strategy.
    pub fn encoding(&self) -> Option<&LogicalEncoding> {
        self.encoding.as_ref()
    }

    /// The layout used for readout: the block layout, or one qubit per
    /// logical spin for the unencoded strategy.
    pub fn readout_encoding(&self) -> LogicalEncoding {
        match &self.encoding {
            Some(e) => e.clone(),
            None => LogicalEncoding::compact(self.logical.num_spins(), 1, false)
                .expect("identity layout is valid"),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn physical(&self) -> &IsingProblem {
        &self.physical
    }

    pub fn num_physical(&self) -> usize {
        self.physical.num_spins()
    }

    /// Physical configuration with every qubit of block `i` (penalty
    /// included) set to `logical[i]`.
    pub fn code_state(&self, logical: &[super::Spin]) -> Vec<super::Spin> {
        let mut out = vec![1; self.num_physical()];
        let layout = self.readout_encoding();
        for (block, &v) in layout.blocks().iter().zip(logical) {
            for q in block.qubits() {
                out[q] = v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{make_af_chain, spins_from_index};

    fn qac_pair(alpha: f64, beta: f64) -> EncodedProblem {
        let enc = Strategy::Qac.compact_encoding(2).unwrap();
        encode_problem(&make_af_chain(2).unwrap(), Strategy::Qac, alpha, beta, enc.as_ref()).unwrap()
    }

    #[test]
    fn qac_pair_layout() {
        let p = qac_pair(0.3, 0.2);
        assert_eq!(p.num_physical(), 8);
        let couplings: Vec<_> = p.physical().couplings().collect();
        let alpha: Vec<_> = couplings.iter().filter(|(_, v)| *v == 0.3).map(|(k, _)| *k).collect();
        let beta: Vec<_> = couplings.iter().filter(|(_, v)| *v == -0.2).map(|(k, _)| *k).collect();
        assert_eq!(alpha, vec![(0, 4), (1, 5), (2, 6)]);
        assert_eq!(beta, vec![(0, 3), (1, 3), (2, 3), (4, 7), (5, 7), (6, 7)]);
        assert_eq!(couplings.len(), 9);
    }

    #[test]
    fn unencoded_pair() {
        let p = encode_problem(&make_af_chain(2).unwrap(), Strategy::Unencoded, 1.0, 0.0, None).unwrap();
        assert_eq!(p.num_physical(), 2);
        assert_eq!(p.physical().couplings().collect::<Vec<_>>(), vec![((0, 1), 1.0)]);
    }

    #[test]
    fn aligned_ground_energy() {
        let (alpha, beta) = (0.3, 0.2);
        let p = qac_pair(alpha, beta);
        let e = p.physical().energy(&p.code_state(&[1, -1])).unwrap();
        assert!((e - (-3.0 * alpha - 6.0 * beta)).abs() < 1e-12);
        let brute = (0..256u64)
            .map(|i| p.physical().energy_of_index(i))
            .fold(f64::INFINITY, f64::min);
        assert!((brute - e).abs() < 1e-12);
    }

    #[test]
    fn effective_logical_coupling() {
        // flipping one logical qubit of the pair costs 2·3α in coupling energy
        let p = qac_pair(0.4, 0.1);
        let ground = p.physical().energy(&p.code_state(&[1, -1])).unwrap();
        let aligned = p.physical().energy(&p.code_state(&[1, 1])).unwrap();
        assert!((aligned - ground - 2.0 * 3.0 * 0.4).abs() < 1e-12);
    }

    #[test]
    fn classical_drops_penalties() {
        let enc = Strategy::Qac.compact_encoding(2).unwrap();
        let p = encode_problem(&make_af_chain(2).unwrap(), Strategy::Classical, 0.5, 0.0, enc.as_ref()).unwrap();
        assert!(p.physical().couplings().all(|(_, v)| v == 0.5));
        assert!(p.encoding().unwrap().blocks().iter().all(|b| b.penalty.is_none()));
    }

    #[test]
    fn argument_errors() {
        let chain = make_af_chain(3).unwrap();
        let enc2 = Strategy::Qac.compact_encoding(2).unwrap();
        assert!(encode_problem(&chain, Strategy::Qac, 0.3, 0.1, enc2.as_ref()).is_err());
        assert!(encode_problem(&chain, Strategy::Classical, 0.3, 0.1, enc2.as_ref()).is_err());
        assert!(encode_problem(&chain, Strategy::Unencoded, 0.3, 0.1, None).is_err());
        assert!(encode_problem(&chain, Strategy::Qac, 0.0, 0.1, None).is_err());
        assert!(encode_problem(&chain, Strategy::Qac, 0.3, 0.1, None).is_err());
    }

    #[test]
    fn incomplete_block_has_no_penalty_terms() {
        let blocks = vec![
            crate::topology::Block { problem: vec![0, 1, 2], penalty: Some(3) },
            crate::topology::Block { problem: vec![4, 5, 6], penalty: None },
        ];
        let enc = LogicalEncoding::new(3, blocks).unwrap();
        let p = encode_problem(&make_af_chain(2).unwrap(), Strategy::Qac, 0.3, 0.2, Some(&enc)).unwrap();
        assert_eq!(p.num_physical(), 7);
        assert_eq!(p.physical().couplings().filter(|(_, v)| *v == -0.2).count(), 3);
        // an all-aligned code state pays the penalty once per complete block
        for i in 0..4u64 {
            let logical = spins_from_index(i, 2);
            let e = p.physical().energy(&p.code_state(&logical)).unwrap();
            let expected = 3.0 * 0.3 * p.logical().energy(&logical).unwrap() - 3.0 * 0.2;
            assert!((e - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn strategy_names() {
        for s in Strategy::ALL {
            assert_eq!(s.to_string().parse::<Strategy>().unwrap(), s);
        }
        assert!("X".parse::<Strategy>().is_err());
    }
}
