//! Instantaneous eigenframes with continuous labels.
//!
//! Eigenvectors are matched across nearby values of `s` by overlap, signs are
//! fixed, and bases of (near-)degenerate clusters are rotated onto each other
//! so that the frame moves as little as possible.

use nalgebra::DMatrix;

use super::closed::HamiltonianParts;
use super::schedule::Coefficients;
use super::spectrum::sorted_eigen;

#[derive(Debug, Clone)]
pub(crate) struct Frame {
    pub s: f64,
    /// Energy of each label.
    pub energies: Vec<f64>,
    /// One column per label.
    pub basis: DMatrix<f64>,
}

pub(crate) fn diagonalize(parts: &HamiltonianParts, sched: &dyn Coefficients, s: f64) -> Frame {
    let (energies, basis) = sorted_eigen(parts.combine(sched.a(s), sched.b(s)));
    Frame { s, energies, basis }
}

/// Labels grouped into clusters of energies closer than `tol` (chained), each
/// cluster sorted by energy and the clusters in ascending order.
pub(crate) fn clusters(energies: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..energies.len()).collect();
    order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));
    let mut out: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match out.last_mut() {
            Some(c) if energies[i] - energies[*c.last().unwrap()] <= tol => c.push(i),
            _ => out.push(vec![i]),
        }
    }
    out
}

/// Orthogonal polar factor of a square matrix.
fn polar(b: DMatrix<f64>) -> DMatrix<f64> {
    let svd = b.svd(true, true);
    svd.u.expect("requested") * svd.v_t.expect("requested")
}

fn top_by_weight(weights: impl Iterator<Item = f64>, k: usize) -> Vec<usize> {
    let mut idx: Vec<(usize, f64)> = weights.enumerate().collect();
    idx.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut sel: Vec<usize> = idx[..k].iter().map(|x| x.0).collect();
    sel.sort_unstable();
    sel
}

pub(crate) struct Alignment {
    /// Rotation applied to `old`'s basis (`old ← old·Q`), if any.
    pub old_rotation: Option<DMatrix<f64>>,
    pub new: Frame,
    /// Smallest diagonal overlap `⟨old_l|new_l⟩` after alignment.
    pub min_overlap: f64,
}

/// Relabels and re-phases `new` to follow `old`. A degenerate cluster of
/// `old` that does not map onto a single cluster of `new` is rotated
/// internally; the rotation is reported so states expressed in `old` can
/// follow.
pub(crate) fn align(old: &mut Frame, mut new: Frame, tol: f64) -> Alignment {
    let dim = old.energies.len();
    let mut overlap = old.basis.tr_mul(&new.basis);
    let mut rotation: Option<DMatrix<f64>> = None;
    let new_clusters = clusters(&new.energies, tol);
    let mut new_cluster_of = vec![0; dim];
    for (id, c) in new_clusters.iter().enumerate() {
        for &j in c {
            new_cluster_of[j] = id;
        }
    }

    for c in clusters(&old.energies, tol).into_iter().filter(|c| c.len() > 1) {
        let k = c.len();
        let sel = top_by_weight((0..dim).map(|j| c.iter().map(|&i| overlap[(i, j)].powi(2)).sum()), k);
        let target = new_cluster_of[sel[0]];
        if new_clusters[target].len() == k && sel.iter().all(|&j| new_cluster_of[j] == target) {
            continue;
        }
        let r = polar(DMatrix::from_fn(k, k, |a, b| overlap[(c[a], sel[b])]));
        let cols = DMatrix::from_fn(dim, k, |row, a| old.basis[(row, c[a])]) * &r;
        let rows = r.transpose() * DMatrix::from_fn(k, dim, |a, j| overlap[(c[a], j)]);
        for a in 0..k {
            old.basis.set_column(c[a], &cols.column(a));
            overlap.set_row(c[a], &rows.row(a));
        }
        let q = rotation.get_or_insert_with(|| DMatrix::identity(dim, dim));
        for a in 0..k {
            for b in 0..k {
                q[(c[a], c[b])] = r[(a, b)];
            }
        }
    }

    for c in new_clusters.into_iter().filter(|c| c.len() > 1) {
        let k = c.len();
        let sel = top_by_weight((0..dim).map(|i| c.iter().map(|&j| overlap[(i, j)].powi(2)).sum()), k);
        let r = polar(DMatrix::from_fn(k, k, |a, b| overlap[(sel[b], c[a])]));
        let cols = DMatrix::from_fn(dim, k, |row, a| new.basis[(row, c[a])]) * &r;
        let ocols = DMatrix::from_fn(dim, k, |i, a| overlap[(i, c[a])]) * &r;
        for a in 0..k {
            new.basis.set_column(c[a], &cols.column(a));
            overlap.set_column(c[a], &ocols.column(a));
        }
    }

    // greedy assignment on overlap magnitude
    let mut entries: Vec<(f64, usize, usize)> = Vec::new();
    for j in 0..dim {
        for i in 0..dim {
            let v = overlap[(i, j)].abs();
            if v > 1e-3 {
                entries.push((v, i, j));
            }
        }
    }
    entries.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut label_of = vec![usize::MAX; dim];
    let mut taken = vec![false; dim];
    for &(_, i, j) in &entries {
        if label_of[j] == usize::MAX && !taken[i] {
            label_of[j] = i;
            taken[i] = true;
        }
    }
    let mut free = (0..dim).filter(|&i| !taken[i]);
    for l in label_of.iter_mut().filter(|l| **l == usize::MAX) {
        *l = free.next().expect("counts match");
    }

    let mut basis = DMatrix::zeros(dim, dim);
    let mut energies = vec![0.0; dim];
    let mut min_overlap = f64::INFINITY;
    for j in 0..dim {
        let l = label_of[j];
        let o = overlap[(l, j)];
        let sign = if o < 0.0 { -1.0 } else { 1.0 };
        basis.set_column(l, &(new.basis.column(j) * sign));
        energies[l] = new.energies[j];
        min_overlap = min_overlap.min(o.abs());
    }
    Alignment {
        old_rotation: rotation,
        new: Frame {
            s: new.s,
            energies,
            basis,
        },
        min_overlap,
    }
}
