//! Plain undirected graphs on vertices `0..n`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{QacError, Result};

/// A simple undirected graph with sorted adjacency lists.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SimpleGraph {
    adjacency: Vec<BTreeSet<usize>>,
}

impl SimpleGraph {
    pub fn new(num_vertices: usize) -> Self {
        SimpleGraph {
            adjacency: vec![BTreeSet::new(); num_vertices],
        }
    }

    /// Builds a graph from an edge list, rejecting loops and out-of-range ends.
    /// Repeated edges collapse into one.
    pub fn from_edges(num_vertices: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = SimpleGraph::new(num_vertices);
        for (a, b) in edges {
            g.add_edge(a, b)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<()> {
        let n = self.num_vertices();
        if a >= n || b >= n {
            return Err(QacError::input(format!("edge ({a},{b}) outside vertex range {n}")));
        }
        if a == b {
            return Err(QacError::input(format!("self-loop at vertex {a}")));
        }
        self.adjacency[a].insert(b);
        self.adjacency[b].insert(a);
        Ok(())
    }

    pub fn num_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency.get(a).is_some_and(|s| s.contains(&b))
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[v].iter().copied()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// Edges as `(smaller, larger)` pairs in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, s)| s.range(a + 1..).map(move |&b| (a, b)))
    }

    /// Subgraph induced by `vertices`, relabelled to `0..vertices.len()` in the
    /// given order.
    pub fn induced(&self, vertices: &[usize]) -> SimpleGraph {
        let index: std::collections::HashMap<usize, usize> =
            vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut g = SimpleGraph::new(vertices.len());
        for (i, &v) in vertices.iter().enumerate() {
            for w in self.neighbors(v) {
                if let Some(&j) = index.get(&w) {
                    g.adjacency[i].insert(j);
                }
            }
        }
        g
    }

    /// Parses `v <n>` followed by `e <i> <j>` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut graph: Option<SimpleGraph> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| QacError::format(lineno + 1, format!("expected integer, got `{s}`")))
            };
            match (fields.as_slice(), graph.as_mut()) {
                (["v", n], None) => graph = Some(SimpleGraph::new(num(n)?)),
                (["e", a, b], Some(g)) => g
                    .add_edge(num(a)?, num(b)?)
                    .map_err(|e| QacError::format(lineno + 1, e.to_string()))?,
                _ => return Err(QacError::format(lineno + 1, format!("unexpected line `{line}`"))),
            }
        }
        graph.ok_or_else(|| QacError::format(0, "missing `v` header"))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("v {}\n", self.num_vertices());
        for (a, b) in self.edges() {
            let _ = writeln!(out, "e {a} {b}");
        }
        out
    }
}
