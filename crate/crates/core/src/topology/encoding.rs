//! Repetition-code blocks laid out on Chimera unit cells.
//!
//! Each 4+4 cell hosts two logical qubits. Logical qubit 0 of a cell uses
//! shore 0 indices {0, 1, 2} as problem qubits and shore 1 index 3 as its
//! penalty qubit; logical qubit 1 mirrors this with shore 1 indices {0, 1, 2}
//! and shore 0 index 3. Logical couplings are carried by three parallel
//! physical couplers: intra-cell rungs `(0,k)–(1,k)`, vertical shore 0 chains
//! between logical-0 blocks of vertically adjacent cells, and horizontal
//! shore 1 chains between logical-1 blocks of horizontally adjacent cells.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::chimera::HardwareGraph;
use super::graph::SimpleGraph;
use crate::error::{QacError, Result};

/// Physical qubits of one logical qubit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Block {
    pub problem: Vec<usize>,
    pub penalty: Option<usize>,
}

impl Block {
    pub fn is_complete(&self) -> bool {
        self.penalty.is_some()
    }

    /// Problem qubits followed by the penalty qubit, if any.
    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.problem.iter().copied().chain(self.penalty)
    }
}

/// Assignment of physical qubits to logical qubits.
///
/// Block `i` carries logical spin `i`. The code length `n` is the number of
/// problem qubits per block; decoding requires it to be odd, which is checked
/// where the vote happens rather than here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicalEncoding {
    n: usize,
    blocks: Vec<Block>,
}

impl LogicalEncoding {
    pub fn new(n: usize, blocks: Vec<Block>) -> Result<Self> {
        if n == 0 {
            return Err(QacError::input("code length must be positive"));
        }
        let mut seen = BTreeSet::new();
        for (i, block) in blocks.iter().enumerate() {
            if block.problem.len() != n {
                return Err(QacError::input(format!(
                    "block {i} has {} problem qubits, expected {n}",
                    block.problem.len()
                )));
            }
            for q in block.qubits() {
                if !seen.insert(q) {
                    return Err(QacError::input(format!("physical qubit {q} used twice")));
                }
            }
        }
        Ok(LogicalEncoding { n, blocks })
    }

    /// Dense layout: block `i` owns ids `i·(n+1) .. i·(n+1)+n` for its problem
    /// qubits and the next id for its penalty qubit. Without penalties the
    /// stride is `n`.
    pub fn compact(num_logical: usize, n: usize, with_penalty: bool) -> Result<Self> {
        let stride = n + usize::from(with_penalty);
        let blocks = (0..num_logical)
            .map(|i| Block {
                problem: (i * stride..i * stride + n).collect(),
                penalty: with_penalty.then_some(i * stride + n),
            })
            .collect();
        LogicalEncoding::new(n, blocks)
    }

    pub fn code_length(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn num_logical(&self) -> usize {
        self.blocks.len()
    }

    /// One more than the largest physical id in use.
    pub fn num_physical(&self) -> usize {
        self.blocks
            .iter()
            .flat_map(Block::qubits)
            .max()
            .map_or(0, |m| m + 1)
    }

    /// Checks that every qubit is active and every penalty qubit couples to
    /// all problem qubits of its block.
    pub fn validate_against(&self, hw: &HardwareGraph) -> Result<()> {
        for (i, block) in self.blocks.iter().enumerate() {
            if let Some(q) = block.qubits().find(|&q| !hw.is_active(q)) {
                return Err(QacError::input(format!("block {i} uses inactive qubit {q}")));
            }
            if let Some(p) = block.penalty {
                if let Some(&q) = block.problem.iter().find(|&&q| !hw.has_edge(p, q)) {
                    return Err(QacError::input(format!(
                        "block {i}: penalty qubit {p} not coupled to {q}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A logical qubit of the encoded graph with its position in the lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicalQubit {
    pub block: Block,
    pub row: usize,
    pub col: usize,
    /// 0 for the shore 0 logical qubit of the cell, 1 for the shore 1 one.
    pub side: usize,
}

impl LogicalQubit {
    pub fn is_complete(&self) -> bool {
        self.block.is_complete()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicalEdge {
    pub a: usize,
    pub b: usize,
    pub couplers: Vec<(usize, usize)>,
}

/// Logical graph induced by the block layout on a hardware graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedGraph {
    n: usize,
    logical_qubits: Vec<LogicalQubit>,
    logical_edges: Vec<LogicalEdge>,
    conflict_groups: Vec<Vec<usize>>,
}

const CODE_LENGTH: usize = 3;

/// Lays out two logical qubits per cell of a `cell_size == 4` Chimera graph.
///
/// Blocks with an inactive problem qubit are dropped; blocks with an inactive
/// penalty qubit are kept without one. Logical ids follow cell-major order,
/// side 0 before side 1, skipping dropped blocks.
pub fn build_encoding(hw: &HardwareGraph) -> Result<(LogicalEncoding, EncodedGraph)> {
    if hw.cell_size() != 4 {
        return Err(QacError::input(format!(
            "encoding layout needs cell size 4, got {}",
            hw.cell_size()
        )));
    }
    let mut logical_qubits = Vec::new();
    let mut slot = BTreeMap::new();
    for row in 0..hw.rows() {
        for col in 0..hw.cols() {
            for side in 0..2 {
                let problem: Vec<usize> = (0..CODE_LENGTH)
                    .map(|k| hw.qubit_id(row, col, side, k))
                    .collect();
                if problem.iter().any(|&q| !hw.is_active(q)) {
                    continue;
                }
                let p = hw.qubit_id(row, col, 1 - side, 3);
                let penalty = hw.is_active(p).then_some(p);
                slot.insert((row, col, side), logical_qubits.len());
                logical_qubits.push(LogicalQubit {
                    block: Block { problem, penalty },
                    row,
                    col,
                    side,
                });
            }
        }
    }

    let mut logical_edges = Vec::new();
    let mut connect = |a: Option<&usize>, b: Option<&usize>, pairs: Vec<(usize, usize)>| {
        if let (Some(&a), Some(&b)) = (a, b) {
            if pairs.iter().all(|&(x, y)| hw.has_edge(x, y)) {
                let couplers = pairs.into_iter().map(|(x, y)| (x.min(y), x.max(y))).collect();
                logical_edges.push(LogicalEdge { a, b, couplers });
            }
        }
    };
    for row in 0..hw.rows() {
        for col in 0..hw.cols() {
            let rung = (0..CODE_LENGTH)
                .map(|k| (hw.qubit_id(row, col, 0, k), hw.qubit_id(row, col, 1, k)))
                .collect();
            connect(slot.get(&(row, col, 0)), slot.get(&(row, col, 1)), rung);
            if row + 1 < hw.rows() {
                let pairs = (0..CODE_LENGTH)
                    .map(|k| (hw.qubit_id(row, col, 0, k), hw.qubit_id(row + 1, col, 0, k)))
                    .collect();
                connect(slot.get(&(row, col, 0)), slot.get(&(row + 1, col, 0)), pairs);
            }
            if col + 1 < hw.cols() {
                let pairs = (0..CODE_LENGTH)
                    .map(|k| (hw.qubit_id(row, col, 1, k), hw.qubit_id(row, col + 1, 1, k)))
                    .collect();
                connect(slot.get(&(row, col, 1)), slot.get(&(row, col + 1, 1)), pairs);
            }
        }
    }

    let encoding = LogicalEncoding::new(
        CODE_LENGTH,
        logical_qubits.iter().map(|l| l.block.clone()).collect(),
    )?;
    let conflict_groups = conflict_groups(&logical_qubits, &logical_edges);
    let graph = EncodedGraph {
        n: CODE_LENGTH,
        logical_qubits,
        logical_edges,
        conflict_groups,
    };
    Ok((encoding, graph))
}

/// Groups logical edges that share a physical coupler, either with each other
/// or with a penalty coupler of some block. Groups are connected components of
/// the sharing relation; only groups of two or more edges, or edges clashing
/// with a penalty coupler, are reported.
fn conflict_groups(qubits: &[LogicalQubit], edges: &[LogicalEdge]) -> Vec<Vec<usize>> {
    let mut penalty_couplers = BTreeSet::new();
    for q in qubits {
        if let Some(p) = q.block.penalty {
            for &x in &q.block.problem {
                penalty_couplers.insert((x.min(p), x.max(p)));
            }
        }
    }
    let mut users: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (i, e) in edges.iter().enumerate() {
        for &c in &e.couplers {
            users.entry(c).or_default().push(i);
        }
    }
    let mut parent: Vec<usize> = (0..edges.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut flagged = BTreeSet::new();
    for (coupler, list) in &users {
        if list.len() > 1 || penalty_couplers.contains(coupler) {
            flagged.extend(list.iter().copied());
        }
        for w in list.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            parent[a] = b;
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &e in &flagged {
        let root = find(&mut parent, e);
        groups.entry(root).or_default().push(e);
    }
    groups.into_values().collect()
}

impl EncodedGraph {
    pub fn code_length(&self) -> usize {
        self.n
    }

    pub fn logical_qubits(&self) -> &[LogicalQubit] {
        &self.logical_qubits
    }

    pub fn logical_edges(&self) -> &[LogicalEdge] {
        &self.logical_edges
    }

    pub fn conflict_groups(&self) -> &[Vec<usize>] {
        &self.conflict_groups
    }

    pub fn num_logical(&self) -> usize {
        self.logical_qubits.len()
    }

    /// Index of the logical edge joining `a` and `b`, if any.
    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.logical_edges
            .iter()
            .position(|e| (e.a == a && e.b == b) || (e.a == b && e.b == a))
    }

    /// The logical adjacency as a plain graph over logical ids.
    pub fn to_simple_graph(&self) -> SimpleGraph {
        let mut g = SimpleGraph::new(self.num_logical());
        for e in &self.logical_edges {
            g.add_edge(e.a, e.b).expect("logical edges are valid");
        }
        g
    }

    /// Encoding whose block `i` is the block of logical qubit `path[i]`.
    pub fn encoding_for_path(&self, path: &[usize]) -> Result<LogicalEncoding> {
        let blocks = path
            .iter()
            .map(|&l| {
                self.logical_qubits
                    .get(l)
                    .map(|q| q.block.clone())
                    .ok_or_else(|| QacError::input(format!("logical id {l} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        LogicalEncoding::new(self.n, blocks)
    }

    /// CSV with columns `logical_id,problem_ids,penalty_id,complete`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("logical_id,problem_ids,penalty_id,complete\n");
        for (i, q) in self.logical_qubits.iter().enumerate() {
            let ids: Vec<String> = q.block.problem.iter().map(usize::to_string).collect();
            let penalty = q.block.penalty.map_or("-1".to_string(), |p| p.to_string());
            let _ = writeln!(out, "{i},{},{penalty},{}", ids.join(";"), q.is_complete());
        }
        out
    }
}
