//! Chain embeddings: simple paths through complete logical qubits.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::encoding::EncodedGraph;
use crate::error::{QacError, Result};

/// Node expansions allowed for one randomized attempt.
const ATTEMPT_BUDGET: usize = 20_000;
/// Randomized attempts per requested embedding before falling back.
const ATTEMPTS_PER_EMBEDDING: usize = 50;
/// Node expansions allowed for the exhaustive enumeration.
const EXHAUSTIVE_BUDGET: usize = 5_000_000;

struct Adjacency {
    /// Neighbours of each logical qubit with the conflict group of the edge.
    neighbors: Vec<Vec<(usize, Option<usize>)>>,
    nodes: Vec<usize>,
}

impl Adjacency {
    fn new(eg: &EncodedGraph) -> Self {
        let mut group_of = HashMap::new();
        for (g, members) in eg.conflict_groups().iter().enumerate() {
            for &e in members {
                group_of.insert(e, g);
            }
        }
        let complete: Vec<bool> = eg.logical_qubits().iter().map(|q| q.is_complete()).collect();
        let mut neighbors = vec![Vec::new(); eg.num_logical()];
        for (i, e) in eg.logical_edges().iter().enumerate() {
            if complete[e.a] && complete[e.b] {
                let g = group_of.get(&i).copied();
                neighbors[e.a].push((e.b, g));
                neighbors[e.b].push((e.a, g));
            }
        }
        let nodes = (0..eg.num_logical()).filter(|&v| complete[v]).collect();
        Adjacency { neighbors, nodes }
    }
}

struct Walk<'a> {
    adj: &'a Adjacency,
    on_path: Vec<bool>,
    path: Vec<usize>,
    groups: BTreeSet<usize>,
    expansions: usize,
}

impl<'a> Walk<'a> {
    fn new(adj: &'a Adjacency) -> Self {
        Walk {
            adj,
            on_path: vec![false; adj.neighbors.len()],
            path: Vec::new(),
            groups: BTreeSet::new(),
            expansions: 0,
        }
    }

    fn push(&mut self, v: usize, group: Option<usize>) {
        self.on_path[v] = true;
        self.path.push(v);
        if let Some(g) = group {
            self.groups.insert(g);
        }
    }

    fn pop(&mut self, group: Option<usize>) {
        let v = self.path.pop().expect("nonempty path");
        self.on_path[v] = false;
        if let Some(g) = group {
            self.groups.remove(&g);
        }
    }

    fn options(&self, v: usize) -> Vec<(usize, Option<usize>)> {
        self.adj.neighbors[v]
            .iter()
            .copied()
            .filter(|&(w, g)| !self.on_path[w] && g.map_or(true, |g| !self.groups.contains(&g)))
            .collect()
    }

    fn free_degree(&self, v: usize) -> usize {
        self.adj.neighbors[v].iter().filter(|&&(w, _)| !self.on_path[w]).count()
    }

    /// Depth-first extension preferring neighbours with few free neighbours,
    /// ties broken at random. Returns false once the budget is spent.
    fn randomized(&mut self, length: usize, budget: usize, rng: &mut ChaCha8Rng) -> bool {
        if self.path.len() == length {
            return true;
        }
        if self.expansions >= budget {
            return false;
        }
        self.expansions += 1;
        let last = *self.path.last().expect("walk starts from a node");
        let mut options = self.options(last);
        options.shuffle(rng);
        let keys: Vec<(usize, u32)> = options.iter().map(|&(w, _)| (self.free_degree(w), rng.gen())).collect();
        let mut order: Vec<usize> = (0..options.len()).collect();
        order.sort_by_key(|&i| keys[i]);
        for i in order {
            let (w, g) = options[i];
            self.push(w, g);
            if self.randomized(length, budget, rng) {
                return true;
            }
            self.pop(g);
        }
        false
    }

    /// Enumerates every path of `length` starting at the current path,
    /// reporting each path once (the copy whose first id is smaller than its
    /// last). Returns false if the budget ran out or `found` reached `count`.
    fn exhaustive(&mut self, length: usize, count: usize, found: &mut Found) -> bool {
        if self.path.len() == length {
            if self.path[0] < self.path[length - 1] {
                found.insert(self.path.clone());
            }
            return found.list.len() < count;
        }
        if self.expansions >= EXHAUSTIVE_BUDGET {
            return false;
        }
        self.expansions += 1;
        let last = *self.path.last().expect("walk starts from a node");
        for (w, g) in self.options(last) {
            self.push(w, g);
            let go_on = self.exhaustive(length, count, found);
            self.pop(g);
            if !go_on {
                return false;
            }
        }
        true
    }
}

#[derive(Default)]
struct Found {
    list: Vec<Vec<usize>>,
    seen: BTreeSet<Vec<usize>>,
}

impl Found {
    fn insert(&mut self, path: Vec<usize>) {
        let canonical = canonical(path);
        if self.seen.insert(canonical.clone()) {
            self.list.push(canonical);
        }
    }
}

/// A path and its reversal denote the same embedding; keep the orientation
/// that starts at the smaller end.
fn canonical(mut path: Vec<usize>) -> Vec<usize> {
    if path.last() < path.first() {
        path.reverse();
    }
    path
}

/// Finds up to `count` distinct chain embeddings of `length` logical qubits.
///
/// A seeded randomized depth-first search runs first. If it cannot supply
/// `count` paths, an exhaustive enumeration decides whether fewer exist.
/// Paths use only complete logical qubits and at most one edge per conflict
/// group; a path and its reverse count once. Output order is deterministic for
/// a given seed.
pub fn embed_chain(eg: &EncodedGraph, length: usize, count: usize, rng_seed: u64) -> Result<Vec<Vec<usize>>> {
    if length < 2 {
        return Err(QacError::input(format!("chain length must be at least 2, got {length}")));
    }
    if count == 0 {
        return Err(QacError::input("embedding count must be positive"));
    }
    let adj = Adjacency::new(eg);
    if adj.nodes.len() < length {
        return Err(QacError::NoEmbedding { length });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut found = Found::default();
    for _ in 0..ATTEMPTS_PER_EMBEDDING * count {
        if found.list.len() == count {
            return Ok(found.list);
        }
        let start = adj.nodes[rng.gen_range(0..adj.nodes.len())];
        let mut walk = Walk::new(&adj);
        walk.push(start, None);
        if walk.randomized(length, ATTEMPT_BUDGET, &mut rng) {
            found.insert(walk.path);
        }
    }

    let mut walk = Walk::new(&adj);
    let mut complete = true;
    for &start in &adj.nodes {
        walk.push(start, None);
        let go_on = walk.exhaustive(length, count, &mut found);
        walk.pop(None);
        if !go_on {
            complete = found.list.len() >= count;
            break;
        }
    }
    found.list.truncate(count);
    match (found.list.len(), complete) {
        (0, true) => Err(QacError::NoEmbedding { length }),
        (_, true) => Ok(found.list),
        (k, false) => Err(QacError::Numerical(format!(
            "embedding search budget exhausted with {k} of {count} paths of length {length}"
        ))),
    }
}

/// Checks that `path` is a simple path over complete logical qubits whose
/// consecutive members share a logical edge, using each conflict group at
/// most once.
pub fn is_valid_embedding(eg: &EncodedGraph, path: &[usize]) -> bool {
    let mut seen = BTreeSet::new();
    let mut groups = BTreeSet::new();
    for &v in path {
        match eg.logical_qubits().get(v) {
            Some(q) if q.is_complete() && seen.insert(v) => {}
            _ => return false,
        }
    }
    path.windows(2).all(|w| {
        let Some(e) = eg.edge_between(w[0], w[1]) else {
            return false;
        };
        match eg.conflict_groups().iter().position(|g| g.contains(&e)) {
            Some(g) => groups.insert(g),
            None => true,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_chimera, build_encoding};

    fn encoded(rows: usize, cols: usize, defects: &[usize]) -> EncodedGraph {
        let hw = build_chimera(rows, cols, 4, &defects.iter().copied().collect()).unwrap();
        build_encoding(&hw).unwrap().1
    }

    #[test]
    fn unique_pair_in_one_cell() {
        let eg = encoded(1, 1, &[]);
        assert_eq!(embed_chain(&eg, 2, 1, 7).unwrap(), vec![vec![0, 1]]);
        // scarcity is proven by exhaustion, so fewer paths come back
        assert_eq!(embed_chain(&eg, 2, 5, 7).unwrap(), vec![vec![0, 1]]);
    }

    #[test]
    fn too_long_for_graph() {
        let eg = encoded(1, 1, &[]);
        assert!(matches!(embed_chain(&eg, 200, 1, 0), Err(QacError::NoEmbedding { length: 200 })));
        // only three complete logical qubits remain
        let eg = encoded(1, 2, &[7]);
        assert!(embed_chain(&eg, 4, 1, 0).is_err());
    }

    #[test]
    fn rejects_bad_arguments() {
        let eg = encoded(1, 1, &[]);
        assert!(matches!(embed_chain(&eg, 1, 1, 0), Err(QacError::Input(_))));
        assert!(matches!(embed_chain(&eg, 2, 0, 0), Err(QacError::Input(_))));
    }

    #[test]
    fn long_chains_on_full_grid() {
        let eg = encoded(8, 8, &[]);
        let paths = embed_chain(&eg, 86, 24, 2024).unwrap();
        assert_eq!(paths.len(), 24);
        let distinct: BTreeSet<_> = paths.iter().collect();
        assert_eq!(distinct.len(), 24);
        for p in &paths {
            assert_eq!(p.len(), 86);
            assert!(is_valid_embedding(&eg, p));
        }
        assert_eq!(embed_chain(&eg, 86, 24, 2024).unwrap(), paths);
    }

    #[test]
    fn incomplete_qubits_avoided() {
        let eg = encoded(2, 2, &[7, 15]);
        for p in embed_chain(&eg, 4, 3, 1).unwrap() {
            assert!(is_valid_embedding(&eg, &p));
            assert!(p.iter().all(|&v| eg.logical_qubits()[v].is_complete()));
        }
    }
}
