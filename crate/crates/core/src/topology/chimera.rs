//! Chimera hardware graphs.
//!
//! Qubit ids are cell-major then shore-major:
//! `id = 2·L·(row·cols + col) + shore·L + index` with `L = cell_size`,
//! `shore ∈ {0, 1}` and `index ∈ [0, L)`. Shore 0 qubits couple vertically
//! to the same index in the cell below (`row + 1`), shore 1 qubits couple
//! horizontally to the same index in the cell to the right (`col + 1`).
//! Within a cell every shore 0 qubit couples to every shore 1 qubit.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{QacError, Result};

/// Position of a physical qubit inside the Chimera lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    pub row: usize,
    pub col: usize,
    pub shore: usize,
    pub index: usize,
}

/// A Chimera graph with a defect mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardwareGraph {
    rows: usize,
    cols: usize,
    cell_size: usize,
    active: Vec<bool>,
    edges: BTreeSet<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

/// Builds the full Chimera graph minus the defective qubits and their couplers.
pub fn build_chimera(
    rows: usize,
    cols: usize,
    cell_size: usize,
    defects: &BTreeSet<usize>,
) -> Result<HardwareGraph> {
    if rows == 0 || cols == 0 || cell_size == 0 {
        return Err(QacError::input(format!(
            "chimera dimensions must be positive, got {rows}x{cols} with cell size {cell_size}"
        )));
    }
    let num_sites = 2 * cell_size * rows * cols;
    if let Some(&bad) = defects.iter().find(|&&d| d >= num_sites) {
        return Err(QacError::input(format!(
            "defect id {bad} outside [0, {num_sites})"
        )));
    }
    let mut active = vec![true; num_sites];
    for &d in defects {
        active[d] = false;
    }

    let id = |row: usize, col: usize, shore: usize, index: usize| {
        2 * cell_size * (row * cols + col) + shore * cell_size + index
    };
    let mut edges = BTreeSet::new();
    let mut push = |a: usize, b: usize| {
        if active[a] && active[b] {
            edges.insert((a.min(b), a.max(b)));
        }
    };
    for row in 0..rows {
        for col in 0..cols {
            for i in 0..cell_size {
                for j in 0..cell_size {
                    push(id(row, col, 0, i), id(row, col, 1, j));
                }
                if row + 1 < rows {
                    push(id(row, col, 0, i), id(row + 1, col, 0, i));
                }
                if col + 1 < cols {
                    push(id(row, col, 1, i), id(row, col + 1, 1, i));
                }
            }
        }
    }
    Ok(HardwareGraph::assemble(rows, cols, cell_size, active, edges))
}

impl HardwareGraph {
    fn assemble(
        rows: usize,
        cols: usize,
        cell_size: usize,
        active: Vec<bool>,
        edges: BTreeSet<(usize, usize)>,
    ) -> Self {
        let mut adjacency = vec![Vec::new(); active.len()];
        for &(a, b) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        HardwareGraph {
            rows,
            cols,
            cell_size,
            active,
            edges,
            adjacency,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell_size(&self) -> usize {
        self.cell_size
    }

    /// Total number of qubit sites, active or not.
    pub fn num_sites(&self) -> usize {
        self.active.len()
    }

    pub fn num_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_active(&self, id: usize) -> bool {
        self.active.get(id).copied().unwrap_or(false)
    }

    pub fn active_qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.active
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| a.then_some(i))
    }

    pub fn defects(&self) -> BTreeSet<usize> {
        self.active
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| (!a).then_some(i))
            .collect()
    }

    /// Edges as `(smaller id, larger id)` pairs in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn neighbors(&self, id: usize) -> &[usize] {
        &self.adjacency[id]
    }

    pub fn qubit_id(&self, row: usize, col: usize, shore: usize, index: usize) -> usize {
        debug_assert!(row < self.rows && col < self.cols && shore < 2 && index < self.cell_size);
        2 * self.cell_size * (row * self.cols + col) + shore * self.cell_size + index
    }

    pub fn site(&self, id: usize) -> Site {
        let per_cell = 2 * self.cell_size;
        let cell = id / per_cell;
        let within = id % per_cell;
        Site {
            row: cell / self.cols,
            col: cell % self.cols,
            shore: within / self.cell_size,
            index: within % self.cell_size,
        }
    }

    /// Whether a coupler between `a` and `b` is allowed by the Chimera layout.
    pub fn is_chimera_legal(&self, a: usize, b: usize) -> bool {
        if a == b || a >= self.num_sites() || b >= self.num_sites() {
            return false;
        }
        let (p, q) = (self.site(a), self.site(b));
        if p.row == q.row && p.col == q.col {
            return p.shore != q.shore;
        }
        if p.shore != q.shore || p.index != q.index {
            return false;
        }
        match p.shore {
            0 => p.col == q.col && p.row.abs_diff(q.row) == 1,
            _ => p.row == q.row && p.col.abs_diff(q.col) == 1,
        }
    }

    /// Checks every structural invariant; used by tests and after parsing.
    pub fn validate(&self) -> Result<()> {
        for &(a, b) in &self.edges {
            if a >= b {
                return Err(QacError::input(format!("edge ({a},{b}) is not normalized")));
            }
            if !self.is_active(a) || !self.is_active(b) {
                return Err(QacError::input(format!("edge ({a},{b}) touches an inactive qubit")));
            }
            if !self.is_chimera_legal(a, b) {
                return Err(QacError::input(format!("edge ({a},{b}) is not a chimera coupler")));
            }
        }
        Ok(())
    }

    /// Parses the text format: a `chimera <rows> <cols> <cell_size>` header
    /// followed by `defect <id>` lines. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut header = None;
        let mut defects = BTreeSet::new();
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
            match fields.as_slice() {
                ["chimera", r, c, l] if header.is_none() => {
                    header = Some((num(r)?, num(c)?, num(l)?));
                }
                ["defect", id] if header.is_some() => {
                    defects.insert(num(id)?);
                }
                _ => return Err(QacError::format(lineno + 1, format!("unexpected line `{line}`"))),
            }
        }
        let (rows, cols, cell_size) =
            header.ok_or_else(|| QacError::format(0, "missing `chimera` header"))?;
        build_chimera(rows, cols, cell_size, &defects)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("chimera {} {} {}\n", self.rows, self.cols, self.cell_size);
        for d in self.defects() {
            let _ = writeln!(out, "defect {d}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expected_edges(r: usize, c: usize) -> usize {
        16 * r * c + 4 * (r * (c - 1) + (r - 1) * c)
    }

    #[test]
    fn single_cell_is_k44() {
        let g = build_chimera(1, 1, 4, &BTreeSet::new()).unwrap();
        assert_eq!(g.num_active(), 8);
        assert_eq!(g.num_edges(), 16);
        g.validate().unwrap();
    }

    #[test]
    fn full_eight_by_eight() {
        let g = build_chimera(8, 8, 4, &BTreeSet::new()).unwrap();
        assert_eq!(g.num_active(), 512);
        assert_eq!(g.num_edges(), 1472);
    }

    #[test]
    fn edge_count_formula() {
        for r in 1..=8 {
            for c in 1..=8 {
                let g = build_chimera(r, c, 4, &BTreeSet::new()).unwrap();
                assert_eq!(g.num_edges(), expected_edges(r, c), "{r}x{c}");
            }
        }
    }

    #[test]
    fn defects_remove_incident_edges() {
        let defects: BTreeSet<usize> = [0, 13, 77, 100, 201, 333, 402, 450, 511].into();
        let g = build_chimera(8, 8, 4, &defects).unwrap();
        assert_eq!(g.num_active(), 503);
        for d in &defects {
            assert!(g.neighbors(*d).is_empty());
        }
        g.validate().unwrap();
        // a defect-free qubit keeps degree 6 away from the boundary
        let interior = g.qubit_id(3, 3, 0, 1);
        assert_eq!(g.neighbors(interior).len(), 6);
    }

    #[test]
    fn out_of_range_defect_rejected() {
        let defects: BTreeSet<usize> = [8].into();
        assert!(matches!(build_chimera(1, 1, 4, &defects), Err(QacError::Input(_))));
        assert!(build_chimera(0, 1, 4, &BTreeSet::new()).is_err());
    }

    #[test]
    fn id_convention_roundtrip() {
        let g = build_chimera(3, 5, 4, &BTreeSet::new()).unwrap();
        for id in 0..g.num_sites() {
            let s = g.site(id);
            assert_eq!(g.qubit_id(s.row, s.col, s.shore, s.index), id);
        }
        assert_eq!(g.qubit_id(1, 2, 1, 3), 8 * (5 + 2) + 4 + 3);
    }

    #[test]
    fn text_format_roundtrip() {
        let text = "# dw2-like\nchimera 2 3 4\ndefect 5\ndefect 17\n";
        let g = HardwareGraph::parse(text).unwrap();
        assert_eq!(g.defects(), [5, 17].into());
        assert_eq!(HardwareGraph::parse(&g.to_text()).unwrap(), g);
        assert!(matches!(
            HardwareGraph::parse("defect 3\n"),
            Err(QacError::Format { .. })
        ));
        assert!(HardwareGraph::parse("chimera 1 1 4\ndefect 99\n").is_err());
    }
}
