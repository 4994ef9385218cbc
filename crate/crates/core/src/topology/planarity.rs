//! Search for K₃,₃ subdivisions.
//!
//! The search reduces a graph by deleting vertices of degree at most one and
//! splicing out vertices of degree two, remembering the spliced vertices on
//! each new edge. A reduced graph with at most [`EXHAUSTIVE_LIMIT`] vertices
//! is searched exhaustively over all branch-vertex choices and path systems,
//! so the answer is exact there. Larger graphs are scanned window by window:
//! breadth-first balls around each vertex are grown while their reduced form
//! stays within the limit, and each is searched exhaustively. A window hit is
//! a genuine certificate; a miss on a large graph only means none was found.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use super::graph::SimpleGraph;

/// Largest reduced graph searched exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 14;
/// Largest window (before reduction) examined on big graphs.
const WINDOW_LIMIT: usize = 96;

/// Branch vertices and the nine connecting paths of a K₃,₃ subdivision.
///
/// `paths[3 * i + j]` runs from `left[i]` to `right[j]`, endpoints included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct K33Certificate {
    pub left: [usize; 3],
    pub right: [usize; 3],
    pub paths: Vec<Vec<usize>>,
}

/// Independently checks a certificate against `g`: six distinct branch
/// vertices, nine paths with the right endpoints along existing edges, and no
/// vertex shared between paths except at branch vertices.
pub fn validate_k33(g: &SimpleGraph, cert: &K33Certificate) -> Result<(), String> {
    let branch: BTreeSet<usize> = cert.left.iter().chain(&cert.right).copied().collect();
    if branch.len() != 6 {
        return Err("branch vertices are not distinct".into());
    }
    if branch.iter().any(|&v| v >= g.num_vertices()) {
        return Err("branch vertex out of range".into());
    }
    if cert.paths.len() != 9 {
        return Err(format!("expected 9 paths, got {}", cert.paths.len()));
    }
    let mut interior_seen = HashSet::new();
    for i in 0..3 {
        for j in 0..3 {
            let path = &cert.paths[3 * i + j];
            if path.first() != Some(&cert.left[i]) || path.last() != Some(&cert.right[j]) {
                return Err(format!("path {i}-{j} has wrong endpoints"));
            }
            for w in path.windows(2) {
                if !g.has_edge(w[0], w[1]) {
                    return Err(format!("path {i}-{j} uses missing edge ({},{})", w[0], w[1]));
                }
            }
            for &v in &path[1..path.len() - 1] {
                if branch.contains(&v) {
                    return Err(format!("path {i}-{j} passes through branch vertex {v}"));
                }
                if !interior_seen.insert(v) {
                    return Err(format!("vertex {v} lies on two paths"));
                }
            }
        }
    }
    Ok(())
}

/// Looks for a subgraph of `g` homeomorphic to K₃,₃.
///
/// Every returned certificate has passed [`validate_k33`]. `None` is a proof
/// of absence only when the reduced graph has at most [`EXHAUSTIVE_LIMIT`]
/// vertices.
pub fn contains_k33_subdivision(g: &SimpleGraph) -> Option<K33Certificate> {
    let all: Vec<usize> = (0..g.num_vertices()).collect();
    let whole = Reduced::new(g, &all);
    if whole.vertices.len() <= EXHAUSTIVE_LIMIT {
        return whole.search().filter(|c| validate_k33(g, c).is_ok());
    }
    // A window that contains a subdivision keeps it when grown, so only the
    // largest admissible window around each vertex is searched.
    let mut searched: Vec<HashSet<usize>> = Vec::new();
    for &center in &whole.vertices {
        let mut best: Option<(Vec<usize>, Reduced)> = None;
        let mut last_size = 0;
        for radius in 1.. {
            let ball = ball(g, center, radius);
            if ball.len() == last_size || ball.len() > WINDOW_LIMIT {
                break;
            }
            last_size = ball.len();
            let reduced = Reduced::new(g, &ball);
            if reduced.vertices.len() > EXHAUSTIVE_LIMIT {
                break;
            }
            best = Some((ball, reduced));
        }
        let Some((ball, reduced)) = best else { continue };
        if reduced.vertices.len() < 6 || searched.iter().any(|s| ball.iter().all(|v| s.contains(v))) {
            continue;
        }
        if let Some(cert) = reduced.search() {
            if validate_k33(g, &cert).is_ok() {
                return Some(cert);
            }
        }
        searched.push(ball.into_iter().collect());
    }
    None
}

fn ball(g: &SimpleGraph, center: usize, radius: usize) -> Vec<usize> {
    let mut dist = HashMap::from([(center, 0usize)]);
    let mut queue = VecDeque::from([center]);
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        if d == radius {
            continue;
        }
        for w in g.neighbors(v) {
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(w) {
                e.insert(d + 1);
                queue.push_back(w);
            }
        }
    }
    let mut out: Vec<usize> = dist.into_keys().collect();
    out.sort_unstable();
    out
}

/// A reduced graph whose edges remember the original vertices they replace.
struct Reduced {
    /// Surviving original vertex ids, ascending.
    vertices: Vec<usize>,
    /// For each surviving edge `(a, b)` with `a < b`, the spliced-out
    /// vertices in order from `a` to `b`.
    routes: BTreeMap<(usize, usize), Vec<usize>>,
}

impl Reduced {
    fn new(g: &SimpleGraph, subset: &[usize]) -> Self {
        let inside: HashSet<usize> = subset.iter().copied().collect();
        let mut adj: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        let mut routes = BTreeMap::new();
        for &v in subset {
            let entry = adj.entry(v).or_default();
            for w in g.neighbors(v) {
                if inside.contains(&w) {
                    entry.insert(w);
                    if v < w {
                        routes.insert((v, w), Vec::new());
                    }
                }
            }
        }
        let mut work: Vec<usize> = subset.to_vec();
        while let Some(v) = work.pop() {
            let Some(nbrs) = adj.get(&v) else { continue };
            match nbrs.len() {
                0 | 1 => {
                    let nbrs: Vec<usize> = nbrs.iter().copied().collect();
                    adj.remove(&v);
                    for u in nbrs {
                        adj.get_mut(&u).expect("neighbour present").remove(&v);
                        routes.remove(&(u.min(v), u.max(v)));
                        work.push(u);
                    }
                }
                2 => {
                    let mut it = nbrs.iter().copied();
                    let (u, w) = (it.next().unwrap(), it.next().unwrap());
                    let mut route = oriented(&routes, u, v);
                    route.push(v);
                    route.extend(oriented(&routes, v, w));
                    adj.remove(&v);
                    routes.remove(&(u.min(v), u.max(v)));
                    routes.remove(&(v.min(w), v.max(w)));
                    adj.get_mut(&u).unwrap().remove(&v);
                    adj.get_mut(&w).unwrap().remove(&v);
                    if adj[&u].contains(&w) {
                        // a parallel route already exists; this one is redundant
                    } else {
                        adj.get_mut(&u).unwrap().insert(w);
                        adj.get_mut(&w).unwrap().insert(u);
                        if u > w {
                            route.reverse();
                        }
                        routes.insert((u.min(w), u.max(w)), route);
                    }
                    work.push(u);
                    work.push(w);
                }
                _ => {}
            }
        }
        Reduced {
            vertices: adj.keys().copied().collect(),
            routes,
        }
    }

    /// Expands the reduced edge `a → b` into the original vertex sequence.
    fn expand(&self, a: usize, b: usize) -> Vec<usize> {
        let mut out = vec![a];
        out.extend(oriented(&self.routes, a, b));
        out.push(b);
        out
    }

    fn search(&self) -> Option<K33Certificate> {
        let m = self.vertices.len();
        if m < 6 {
            return None;
        }
        let index: HashMap<usize, usize> =
            self.vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut adj = vec![Vec::new(); m];
        for &(a, b) in self.routes.keys() {
            let (i, j) = (index[&a], index[&b]);
            adj[i].push(j);
            adj[j].push(i);
        }
        let search = PathSystem::new(&adj);
        let triples = combinations3(m);
        for left in &triples {
            for right in &triples {
                if right[0] <= left[0] || right.iter().any(|r| left.contains(r)) {
                    continue;
                }
                if let Some(paths) = search.solve(*left, *right) {
                    let to_orig = |path: &[usize]| -> Vec<usize> {
                        let mut out = vec![self.vertices[path[0]]];
                        for w in path.windows(2) {
                            let piece = self.expand(self.vertices[w[0]], self.vertices[w[1]]);
                            out.extend_from_slice(&piece[1..]);
                        }
                        out
                    };
                    return Some(K33Certificate {
                        left: left.map(|i| self.vertices[i]),
                        right: right.map(|i| self.vertices[i]),
                        paths: paths.iter().map(|p| to_orig(p)).collect(),
                    });
                }
            }
        }
        None
    }
}

fn oriented(routes: &BTreeMap<(usize, usize), Vec<usize>>, a: usize, b: usize) -> Vec<usize> {
    let mut r = routes[&(a.min(b), a.max(b))].clone();
    if a > b {
        r.reverse();
    }
    r
}

fn combinations3(m: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            for c in b + 1..m {
                out.push([a, b, c]);
            }
        }
    }
    out
}

/// Backtracking search for nine internally disjoint paths on a small graph,
/// with vertex sets held as bitmasks.
struct PathSystem {
    adj: Vec<u64>,
}

struct SolveState {
    /// Vertices unavailable as path interiors: branch vertices and interiors
    /// of placed paths.
    blocked: u64,
    pairs: [(usize, usize); 9],
    paths: Vec<Vec<usize>>,
}

impl PathSystem {
    fn new(adj: &[Vec<usize>]) -> Self {
        assert!(adj.len() <= 64, "bitmask search handles at most 64 vertices");
        let adj = adj
            .iter()
            .map(|nbrs| nbrs.iter().fold(0u64, |m, &w| m | 1 << w))
            .collect();
        PathSystem { adj }
    }

    fn solve(&self, left: [usize; 3], right: [usize; 3]) -> Option<Vec<Vec<usize>>> {
        let mut blocked = 0u64;
        for &v in left.iter().chain(&right) {
            blocked |= 1 << v;
        }
        let mut pairs = [(0, 0); 9];
        for (i, &l) in left.iter().enumerate() {
            for (j, &r) in right.iter().enumerate() {
                pairs[3 * i + j] = (l, r);
            }
        }
        let mut state = SolveState {
            blocked,
            pairs,
            paths: Vec::with_capacity(9),
        };
        if !self.feasible(&state, 0) {
            return None;
        }
        self.place(&mut state, 0).then_some(state.paths)
    }

    fn place(&self, st: &mut SolveState, k: usize) -> bool {
        if k == st.pairs.len() {
            return true;
        }
        let (l, r) = st.pairs[k];
        let mut path = vec![l];
        self.extend(st, k, r, &mut path)
    }

    /// Grows `path` toward `target` through unblocked vertices and recurses
    /// into the next pair for each completed path.
    fn extend(&self, st: &mut SolveState, k: usize, target: usize, path: &mut Vec<usize>) -> bool {
        let last = *path.last().unwrap();
        let nbrs = self.adj[last];
        if nbrs & (1 << target) != 0 {
            path.push(target);
            st.paths.push(path.clone());
            if self.feasible(st, k + 1) && self.place(st, k + 1) {
                return true;
            }
            st.paths.pop();
            path.pop();
        }
        let mut open = nbrs & !st.blocked;
        while open != 0 {
            let w = open.trailing_zeros() as usize;
            open &= open - 1;
            st.blocked |= 1 << w;
            path.push(w);
            if self.reaches(st.blocked, w, target) && self.extend(st, k, target, path) {
                return true;
            }
            path.pop();
            st.blocked &= !(1 << w);
        }
        false
    }

    /// Necessary conditions for the pairs from `k` on: every branch vertex
    /// keeps enough usable incident edges, and every pair stays connected
    /// through unblocked vertices.
    fn feasible(&self, st: &SolveState, k: usize) -> bool {
        let rest = &st.pairs[k..];
        let free = !st.blocked;
        let mut need = [0u32; 64];
        let mut direct = [0u64; 64];
        for &(l, r) in rest {
            need[l] += 1;
            need[r] += 1;
            direct[l] |= 1 << r;
            direct[r] |= 1 << l;
        }
        for &(l, r) in rest {
            for b in [l, r] {
                if (self.adj[b] & (free | direct[b])).count_ones() < need[b] {
                    return false;
                }
            }
        }
        rest.iter().all(|&(l, r)| self.reaches(st.blocked, l, r))
    }

    /// Whether `to` is adjacent to `from` or to a vertex reachable from it
    /// through unblocked vertices.
    fn reaches(&self, blocked: u64, from: usize, to: usize) -> bool {
        let target = 1u64 << to;
        let mut seen = 1u64 << from;
        let mut frontier = seen;
        loop {
            let mut next = 0u64;
            let mut f = frontier;
            while f != 0 {
                let v = f.trailing_zeros() as usize;
                f &= f - 1;
                next |= self.adj[v];
            }
            if next & target != 0 {
                return true;
            }
            next &= !blocked & !seen;
            if next == 0 {
                return false;
            }
            seen |= next;
            frontier = next;
        }
    }
}
