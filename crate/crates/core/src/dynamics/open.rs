//! Adiabatic Markovian master equation.
//!
//! The density matrix is carried in the instantaneous eigenframe of `H(s)`.
//! A step from `s₀` to `s₁` splits into
//!
//! * frame transport: the frame rotation `V₀ᵀV₁ = e^K` generates the
//!   non-adiabatic coupling `K/h`; its first Magnus term is integrated in the
//!   interaction picture with the dynamical phases of both frames, so fast
//!   Bohr frequencies are averaged out rather than resolved;
//! * dissipation: Lindblad operators binned by Bohr frequency, propagated
//!   exactly (Taylor series) with the generator frozen at each endpoint, in
//!   half steps around the transport.
//!
//! Step doubling estimates the local error.

use nalgebra::{DMatrix, DVector};

use super::bath::{bath_rate, BathSpec, LambShiftTable};
use super::closed::{landing_points, HamiltonianParts, Trajectory};
use super::frame::{align, clusters, diagonalize, Frame};
use super::schedule::Coefficients;
use super::state::{min_eigenvalue_split, split, QuantumState, C64, NORM_TOLERANCE};
use crate::error::{QacError, Result};
use crate::problem::IsingProblem;

/// Default qubit cap for density-matrix evolution.
pub const DEFAULT_OPEN_CAP: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct OpenOptions {
    /// Local error tolerance per step (Frobenius norm of the density matrix
    /// difference between one step and two half steps).
    pub tolerance: f64,
    pub initial_ds: f64,
    pub max_ds: f64,
    pub min_ds: f64,
    pub max_steps: usize,
    /// Bohr frequencies (and energies) closer than this are merged, in rad/ns.
    pub degeneracy_tolerance: f64,
    pub lamb_shift: bool,
    /// Values of `s` at which the state is recorded; `s = 1` always is.
    pub record: Vec<f64>,
    /// Compute the smallest eigenvalue of ρ at every recorded point.
    pub check_positivity: bool,
    pub cap: usize,
}

impl Default for OpenOptions {
    fn default() -> Self {
        OpenOptions {
            tolerance: 1e-8,
            initial_ds: 1e-4,
            max_ds: 0.05,
            min_ds: 1e-12,
            max_steps: 1_000_000,
            degeneracy_tolerance: 1e-6,
            lamb_shift: false,
            record: Vec::new(),
            check_positivity: true,
            cap: DEFAULT_OPEN_CAP,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OpenTrajectory {
    pub trajectory: Trajectory,
    /// Largest `|tr ρ − 1|` after any accepted step.
    pub max_trace_deviation: f64,
    /// Smallest eigenvalue of ρ over the recorded points (`+∞` when
    /// positivity checks are off).
    pub min_eigenvalue: f64,
}

impl OpenTrajectory {
    pub fn final_state(&self) -> &QuantumState {
        self.trajectory.final_state()
    }
}

/// Real and imaginary parts of a complex matrix.
#[derive(Debug, Clone, PartialEq)]
struct Split {
    re: DMatrix<f64>,
    im: DMatrix<f64>,
}

impl Split {
    fn zeros(n: usize) -> Self {
        Split {
            re: DMatrix::zeros(n, n),
            im: DMatrix::zeros(n, n),
        }
    }

    /// `self · other`.
    fn mul(&self, other: &Split) -> Split {
        Split {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }

    /// `self · otherᴴ`.
    fn mul_adjoint(&self, other: &Split) -> Split {
        Split {
            re: mul_t(&self.re, &other.re) + mul_t(&self.im, &other.im),
            im: mul_t(&self.im, &other.re) - mul_t(&self.re, &other.im),
        }
    }

    fn axpy(&mut self, k: f64, other: &Split) {
        self.re.zip_apply(&other.re, |a, b| *a += k * b);
        self.im.zip_apply(&other.im, |a, b| *a += k * b);
    }

    fn amax(&self) -> f64 {
        self.re.amax().max(self.im.amax())
    }

    fn hermitize(&mut self) {
        let n = self.re.nrows();
        for i in 0..n {
            self.im[(i, i)] = 0.0;
            for j in i + 1..n {
                let r = 0.5 * (self.re[(i, j)] + self.re[(j, i)]);
                let m = 0.5 * (self.im[(i, j)] - self.im[(j, i)]);
                self.re[(i, j)] = r;
                self.re[(j, i)] = r;
                self.im[(i, j)] = m;
                self.im[(j, i)] = -m;
            }
        }
    }

    fn trace(&self) -> f64 {
        self.re.trace()
    }

    /// `Bᵀ·self·B` for a real matrix `B`.
    fn congruence(&self, b: &DMatrix<f64>) -> Split {
        Split {
            re: b.tr_mul(&self.re) * b,
            im: b.tr_mul(&self.im) * b,
        }
    }

    /// `B·self·Bᵀ` for a real matrix `B`.
    fn congruence_t(&self, b: &DMatrix<f64>) -> Split {
        Split {
            re: mul_t(&(b * &self.re), b),
            im: mul_t(&(b * &self.im), b),
        }
    }

    fn frobenius_distance(&self, other: &Split) -> f64 {
        ((&self.re - &other.re).norm_squared() + (&self.im - &other.im).norm_squared()).sqrt()
    }
}

fn mul_t(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b.transpose()
}

/// Above this many block-sector entries the dissipator is split instead of
/// exponentiated; large clusters appear near the ends of the anneal.
const SECTOR_LIMIT: usize = 1200;

/// Dissipator frozen at one frame, acting on states in that frame's labels.
///
/// The generator leaves two kinds of sector invariant: the cluster-diagonal
/// blocks together, and each off-diagonal cluster pair on its own. Each
/// sector is propagated by an exact matrix exponential.
struct Dissipator {
    /// Position in energy order → label.
    order: Vec<usize>,
    /// Cluster index ranges in energy order.
    ranges: Vec<(usize, usize)>,
    /// `V_pᵀ σᶻ_q V_p` per qubit, in energy order.
    x: Vec<DMatrix<f64>>,
    /// `X ∘ Γ`, `Γ_ab = γ(E_b − E_a)` on cluster energies.
    #[cfg(test)]
    xg: Vec<DMatrix<f64>>,
    /// Block-diagonal `Σ γ L†L` and Lamb shift, one block per cluster.
    g: Vec<DMatrix<f64>>,
    lamb: Option<Vec<DMatrix<f64>>>,
    gamma0: f64,
    sectors: Option<Sectors>,
    pieces: Option<Pieces>,
    cache: Vec<(f64, Propagator)>,
}

/// Closed-form parts of the generator, each a Lindbladian in its own right:
/// dephasing by the cluster-diagonal part of each `X_q`, transfers out of
/// each cluster, and the Lamb shift. A symmetric product of their exact
/// exponentials is completely positive and trace preserving for any step.
struct Pieces {
    /// Per qubit, eigenvectors of each `X_q,II` and all eigenvalues in
    /// energy order.
    dephasing: Vec<(Vec<DMatrix<f64>>, Vec<f64>)>,
    lamb: Option<(Vec<DMatrix<f64>>, Vec<f64>)>,
    transfers: Vec<Transfer>,
}

/// Jumps from cluster `J` to every other cluster.
struct Transfer {
    cluster: usize,
    /// Eigenvectors and eigenvalues of the outflow `Σ Γ_KJ X_KJᵀ X_KJ`.
    basis: DMatrix<f64>,
    rates: Vec<f64>,
    /// `(K, √Γ_KJ · X_KJ · basis)` for each qubit and target cluster.
    jumps: Vec<(usize, DMatrix<f64>)>,
}

/// Generators of the invariant sectors. With a Lamb shift each generator
/// acts on stacked real and imaginary parts.
struct Sectors {
    /// Start of each cluster's `len × len` block in the block-sector vector.
    offsets: Vec<usize>,
    block: DMatrix<f64>,
    /// Decay rate and frequency of coherences between two singleton clusters.
    scalar_rate: DMatrix<f64>,
    scalar_freq: DMatrix<f64>,
    /// Cluster pairs `I < J` with at least one multiplet.
    pairs: Vec<(usize, usize, PairGenerator)>,
}

enum PairGenerator {
    /// Real symmetric generator (no Lamb shift), stored diagonalized.
    Symmetric { vectors: DMatrix<f64>, rates: DVector<f64> },
    General(DMatrix<f64>),
}

impl PairGenerator {
    fn new(m: DMatrix<f64>, symmetric: bool) -> Self {
        if symmetric {
            let e = ((&m + m.transpose()) * 0.5).symmetric_eigen();
            PairGenerator::Symmetric {
                vectors: e.eigenvectors,
                rates: e.eigenvalues,
            }
        } else {
            PairGenerator::General(m)
        }
    }

    fn exp(&self, tau: f64) -> DMatrix<f64> {
        match self {
            PairGenerator::Symmetric { vectors, rates } => {
                let mut scaled = vectors.clone();
                for (mut col, &r) in scaled.column_iter_mut().zip(rates.iter()) {
                    col *= (r * tau).exp();
                }
                mul_t(&scaled, vectors)
            }
            PairGenerator::General(m) => (m * tau).exp(),
        }
    }
}

#[derive(Clone)]
struct Propagator {
    block: DMatrix<f64>,
    scalar: Split,
    pairs: Vec<DMatrix<f64>>,
}

impl Propagator {
    fn squared(&self) -> Propagator {
        let sq = |m: &DMatrix<f64>| m * m;
        let mut scalar = self.scalar.clone();
        scalar.re.zip_zip_apply(&self.scalar.re, &self.scalar.im, |o, r, i| *o = r * r - i * i);
        scalar.im.zip_zip_apply(&self.scalar.re, &self.scalar.im, |o, r, i| *o = 2.0 * r * i);
        Propagator {
            block: sq(&self.block),
            scalar,
            pairs: self.pairs.iter().map(sq).collect(),
        }
    }
}

impl Dissipator {
    fn new(frame: &Frame, z: &[Vec<f64>], bath: &BathSpec, lamb: Option<&LambShiftTable>, tol: f64, sector_limit: usize) -> Self {
        let groups = clusters(&frame.energies, tol);
        let order: Vec<usize> = groups.iter().flatten().copied().collect();
        let mut ranges = Vec::with_capacity(groups.len());
        let mut start = 0;
        let mut centre = Vec::with_capacity(groups.len());
        for g in &groups {
            ranges.push((start, g.len()));
            start += g.len();
            centre.push(g.iter().map(|&l| frame.energies[l]).sum::<f64>() / g.len() as f64);
        }
        let dim = order.len();
        let mut cluster_of = vec![0; dim];
        for (c, &(st, len)) in ranges.iter().enumerate() {
            cluster_of[st..st + len].fill(c);
        }
        let nc = ranges.len();
        let rate = DMatrix::from_fn(nc, nc, |i, j| bath_rate(centre[j] - centre[i], bath));
        let shift = lamb.map(|t| DMatrix::from_fn(nc, nc, |i, j| t.eval(centre[j] - centre[i])));
        let vp = DMatrix::from_fn(dim, dim, |r, p| frame.basis[(r, order[p])]);
        let mut x = Vec::with_capacity(z.len());
        #[cfg(test)]
        let mut xg = Vec::with_capacity(z.len());
        let mut g: Vec<DMatrix<f64>> = ranges.iter().map(|&(_, len)| DMatrix::zeros(len, len)).collect();
        let mut lamb_blocks: Option<Vec<DMatrix<f64>>> = shift.as_ref().map(|_| g.clone());
        for zq in z {
            let mut scaled = vp.clone();
            for (r, &zr) in zq.iter().enumerate() {
                scaled.row_mut(r).scale_mut(zr);
            }
            let xq = vp.tr_mul(&scaled);
            let xgq = DMatrix::from_fn(dim, dim, |a, b| xq[(a, b)] * rate[(cluster_of[a], cluster_of[b])]);
            for (c, &(st, len)) in ranges.iter().enumerate() {
                g[c] += xgq.columns(st, len).tr_mul(&xq.columns(st, len));
                if let (Some(blocks), Some(sh)) = (lamb_blocks.as_mut(), shift.as_ref()) {
                    let xs = DMatrix::from_fn(dim, len, |a, b| xq[(a, st + b)] * sh[(cluster_of[a], c)]);
                    blocks[c] += xs.tr_mul(&xq.columns(st, len));
                }
            }
            x.push(xq);
            #[cfg(test)]
            xg.push(xgq);
        }
        let gamma0 = bath_rate(0.0, bath);
        let mut d = Dissipator {
            order,
            ranges,
            x,
            #[cfg(test)]
            xg,
            g,
            lamb: lamb_blocks,
            gamma0,
            sectors: None,
            pieces: None,
            cache: Vec::new(),
        };
        let block_size: usize = d.ranges.iter().map(|&(_, len)| len * len).sum();
        let width = if d.lamb.is_some() { 2 } else { 1 };
        if block_size * width <= sector_limit {
            d.sectors = Some(d.build_sectors(&rate));
        } else {
            d.pieces = Some(d.build_pieces(&rate));
        }
        d
    }

    fn build_pieces(&self, rate: &DMatrix<f64>) -> Pieces {
        let eigen_blocks = |blocks: &mut dyn FnMut(usize, usize, usize) -> DMatrix<f64>| {
            let mut vectors = Vec::with_capacity(self.ranges.len());
            let mut values = Vec::with_capacity(self.order.len());
            for (c, &(st, len)) in self.ranges.iter().enumerate() {
                let m = blocks(c, st, len);
                let e = ((&m + m.transpose()) * 0.5).symmetric_eigen();
                values.extend(e.eigenvalues.iter());
                vectors.push(e.eigenvectors);
            }
            (vectors, values)
        };
        let dephasing = self
            .x
            .iter()
            .map(|xq| eigen_blocks(&mut |_, st, len| xq.view((st, st), (len, len)).into_owned()))
            .collect();
        let lamb = self.lamb.as_ref().map(|h| eigen_blocks(&mut |c, _, _| h[c].clone()));
        let mut transfers = Vec::new();
        for (j, &(sj, lj)) in self.ranges.iter().enumerate() {
            let mut raw = Vec::new();
            for xq in &self.x {
                let scale = xq.amax();
                for (k, &(sk, lk)) in self.ranges.iter().enumerate() {
                    if k == j {
                        continue;
                    }
                    let block = xq.view((sk, sj), (lk, lj));
                    if block.amax() <= 1e-15 * scale {
                        continue;
                    }
                    raw.push((k, block * rate[(k, j)].sqrt()));
                }
            }
            if raw.is_empty() {
                continue;
            }
            let outflow = raw.iter().fold(DMatrix::zeros(lj, lj), |acc, (_, z)| acc + z.tr_mul(z));
            let e = ((&outflow + outflow.transpose()) * 0.5).symmetric_eigen();
            transfers.push(Transfer {
                cluster: j,
                rates: e.eigenvalues.iter().map(|&g| g.max(0.0)).collect(),
                jumps: raw.into_iter().map(|(k, z)| (k, z * &e.eigenvectors)).collect(),
                basis: e.eigenvectors,
            });
        }
        Pieces { dephasing, lamb, transfers }
    }

    /// Generator of `ρ_IJ` in row-major slots; `rate` is `γ` between the
    /// source block and the target block (`γ(0)` off the diagonal sector).
    fn pair_generator(&self, (si, li): (usize, usize), (sj, lj): (usize, usize), ci: usize, cj: usize) -> DMatrix<f64> {
        let n = li * lj;
        let width = if self.lamb.is_some() { 2 } else { 1 };
        let mut m = DMatrix::zeros(width * n, width * n);
        for xq in &self.x {
            for a in 0..li {
                for c in 0..lj {
                    let row = a * lj + c;
                    for b in 0..li {
                        let xab = xq[(si + a, si + b)];
                        if xab == 0.0 {
                            continue;
                        }
                        for d in 0..lj {
                            m[(row, b * lj + d)] += self.gamma0 * xab * xq[(sj + c, sj + d)];
                        }
                    }
                }
            }
        }
        for a in 0..li {
            for c in 0..lj {
                let row = a * lj + c;
                for b in 0..li {
                    m[(row, b * lj + c)] -= 0.5 * self.g[ci][(a, b)];
                }
                for d in 0..lj {
                    m[(row, a * lj + d)] -= 0.5 * self.g[cj][(d, c)];
                }
            }
        }
        if let Some(h) = &self.lamb {
            embed_commutator(&mut m, n, li, lj, &h[ci], &h[cj]);
        }
        m
    }

    fn build_sectors(&self, rate: &DMatrix<f64>) -> Sectors {
        let dim = self.order.len();
        let width = if self.lamb.is_some() { 2 } else { 1 };
        let mut offsets = Vec::with_capacity(self.ranges.len());
        let mut nb = 0;
        for &(_, len) in &self.ranges {
            offsets.push(nb);
            nb += len * len;
        }
        // transitions between diagonal blocks and −½{G, ·} within them
        let mut block = DMatrix::zeros(width * nb, width * nb);
        for (k, &(sk, lk)) in self.ranges.iter().enumerate() {
            for (j, &(sj, lj)) in self.ranges.iter().enumerate() {
                let gamma = rate[(k, j)];
                if gamma == 0.0 {
                    continue;
                }
                for xq in &self.x {
                    for a in 0..lk {
                        for c in 0..lk {
                            let row = offsets[k] + a * lk + c;
                            for b in 0..lj {
                                let xab = gamma * xq[(sk + a, sj + b)];
                                if xab == 0.0 {
                                    continue;
                                }
                                for d in 0..lj {
                                    block[(row, offsets[j] + b * lj + d)] += xab * xq[(sk + c, sj + d)];
                                }
                            }
                        }
                    }
                }
            }
            for a in 0..lk {
                for c in 0..lk {
                    let row = offsets[k] + a * lk + c;
                    for b in 0..lk {
                        block[(row, offsets[k] + b * lk + c)] -= 0.5 * self.g[k][(a, b)];
                        block[(row, offsets[k] + a * lk + b)] -= 0.5 * self.g[k][(b, c)];
                    }
                }
            }
            if let Some(h) = &self.lamb {
                let src = block.view((offsets[k], 0), (lk * lk, nb)).into_owned();
                block.view_mut((nb + offsets[k], nb), (lk * lk, nb)).copy_from(&src);
                for a in 0..lk {
                    for c in 0..lk {
                        let row = offsets[k] + a * lk + c;
                        for b in 0..lk {
                            let l = h[k][(a, b)];
                            let r = h[k][(b, c)];
                            // −i[H, ρ] on stacked (re, im)
                            block[(row, nb + offsets[k] + b * lk + c)] += l;
                            block[(nb + row, offsets[k] + b * lk + c)] -= l;
                            block[(row, nb + offsets[k] + a * lk + b)] -= r;
                            block[(nb + row, offsets[k] + a * lk + b)] += r;
                        }
                    }
                }
            }
        }
        let mut scalar_rate = DMatrix::zeros(dim, dim);
        let mut scalar_freq = DMatrix::zeros(dim, dim);
        let mut pairs = Vec::new();
        for (i, &ri) in self.ranges.iter().enumerate() {
            for (j, &rj) in self.ranges.iter().enumerate() {
                if i == j {
                    continue;
                }
                if ri.1 == 1 && rj.1 == 1 {
                    let (a, c) = (ri.0, rj.0);
                    let deph: f64 = self.x.iter().map(|xq| xq[(a, a)] * xq[(c, c)]).sum();
                    scalar_rate[(a, c)] = self.gamma0 * deph - 0.5 * (self.g[i][(0, 0)] + self.g[j][(0, 0)]);
                    if let Some(h) = &self.lamb {
                        scalar_freq[(a, c)] = -(h[i][(0, 0)] - h[j][(0, 0)]);
                    }
                } else if i < j {
                    pairs.push((i, j, PairGenerator::new(self.pair_generator(ri, rj, i, j), self.lamb.is_none())));
                }
            }
        }
        Sectors {
            offsets,
            block,
            scalar_rate,
            scalar_freq,
            pairs,
        }
    }

    fn permute(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(self.order[i], self.order[j])])
    }

    fn unpermute(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[(self.order[i], self.order[j])] = m[(i, j)];
            }
        }
        out
    }

    #[cfg(test)]
    /// Bath part of the generator on a real matrix in energy order.
    fn apply_real(&self, r: &DMatrix<f64>) -> DMatrix<f64> {
        let dim = r.nrows();
        let mut out = DMatrix::zeros(dim, dim);
        for (xq, xgq) in self.x.iter().zip(&self.xg) {
            // transitions into diagonal blocks: Σ_J XΓ[K,J] ρ_JJ X[K,J]ᵀ
            let mut y = DMatrix::zeros(dim, dim);
            for &(st, len) in &self.ranges {
                let blk = xgq.columns(st, len) * r.view((st, st), (len, len));
                y.columns_mut(st, len).copy_from(&blk);
            }
            for &(st, len) in &self.ranges {
                let blk = y.rows(st, len) * xq.rows(st, len).transpose();
                let mut o = out.view_mut((st, st), (len, len));
                o += blk;
            }
            // dephasing of coherences between clusters: γ(0) X_II ρ_IJ X_JJ
            let mut w = DMatrix::zeros(dim, dim);
            for &(st, len) in &self.ranges {
                let blk = xq.view((st, st), (len, len)) * r.rows(st, len);
                w.rows_mut(st, len).copy_from(&blk);
            }
            for &(st, len) in &self.ranges {
                let blk = w.columns(st, len) * xq.view((st, st), (len, len));
                for &(si, li) in &self.ranges {
                    if si == st {
                        continue;
                    }
                    let mut o = out.view_mut((si, st), (li, len));
                    o.zip_apply(&blk.rows(si, li), |a, b| *a += self.gamma0 * b);
                }
            }
        }
        // −½{G, ρ}
        for (c, &(st, len)) in self.ranges.iter().enumerate() {
            let left = &self.g[c] * r.rows(st, len);
            let mut o = out.rows_mut(st, len);
            o.zip_apply(&left, |a, b| *a -= 0.5 * b);
            let right = r.columns(st, len) * &self.g[c];
            let mut o = out.columns_mut(st, len);
            o.zip_apply(&right, |a, b| *a -= 0.5 * b);
        }
        out
    }

    #[cfg(test)]
    /// `[H_LS, r]` for a real matrix in energy order.
    fn lamb_commutator(&self, blocks: &[DMatrix<f64>], r: &DMatrix<f64>) -> DMatrix<f64> {
        let dim = r.nrows();
        let mut out = DMatrix::zeros(dim, dim);
        for (c, &(st, len)) in self.ranges.iter().enumerate() {
            let left = &blocks[c] * r.rows(st, len);
            let mut o = out.rows_mut(st, len);
            o += left;
            let right = r.columns(st, len) * &blocks[c];
            let mut o = out.columns_mut(st, len);
            o -= right;
        }
        out
    }

    #[cfg(test)]
    fn apply(&self, rho: &Split) -> Split {
        let mut out = Split {
            re: self.apply_real(&rho.re),
            im: self.apply_real(&rho.im),
        };
        if let Some(blocks) = &self.lamb {
            // −i[H, R + iI] = [H, I] − i[H, R]
            out.re += self.lamb_commutator(blocks, &rho.im);
            out.im -= self.lamb_commutator(blocks, &rho.re);
        }
        out
    }

    fn propagator(&mut self, tau: f64) -> Result<Propagator> {
        if let Some((_, p)) = self.cache.iter().find(|(t, _)| *t == tau) {
            return Ok(p.clone());
        }
        let p = if let Some((_, half)) = self.cache.iter().find(|(t, _)| *t * 2.0 == tau) {
            half.squared()
        } else {
            let sec = self.sectors.as_ref().expect("propagators exist only with sectors");
            let check = |m: DMatrix<f64>| {
                if m.iter().all(|v| v.is_finite()) {
                    Ok(m)
                } else {
                    Err(QacError::Numerical(format!("dissipator exponential overflowed at τ = {tau:e} ns")))
                }
            };
            let block = check((&sec.block * tau).exp())?;
            let mut scalar = Split::zeros(self.order.len());
            for ((o_re, o_im), (&r, &f)) in scalar
                .re
                .iter_mut()
                .zip(scalar.im.iter_mut())
                .zip(sec.scalar_rate.iter().zip(sec.scalar_freq.iter()))
            {
                let z = C64::new(r * tau, f * tau).exp();
                *o_re = z.re;
                *o_im = z.im;
            }
            let pairs = sec.pairs.iter().map(|(_, _, m)| check(m.exp(tau))).collect::<Result<_>>()?;
            Propagator { block, scalar, pairs }
        };
        if self.cache.len() >= 4 {
            self.cache.remove(0);
        }
        self.cache.push((tau, p.clone()));
        Ok(p)
    }

    /// Exact propagation for a time `tau` (ns).
    fn propagate(&mut self, rho: &Split, tau: f64) -> Result<Split> {
        let state = Split {
            re: self.permute(&rho.re),
            im: self.permute(&rho.im),
        };
        let out = if self.sectors.is_some() {
            let p = self.propagator(tau)?;
            self.propagate_sectors(&state, &p)
        } else {
            self.propagate_pieces(&state, tau)
        };
        Ok(Split {
            re: self.unpermute(&out.re),
            im: self.unpermute(&out.im),
        })
    }

    fn propagate_sectors(&self, state: &Split, p: &Propagator) -> Split {
        let sec = self.sectors.as_ref().expect("checked by caller");
        let lamb = self.lamb.is_some();
        let nb = sec.offsets.last().map_or(0, |&o| o) + self.ranges.last().map_or(0, |&(_, l)| l * l);
        let mut out = Split::zeros(self.order.len());

        let gather = |m: &DMatrix<f64>, v: &mut [f64]| {
            for (k, &(st, len)) in self.ranges.iter().enumerate() {
                for a in 0..len {
                    for c in 0..len {
                        v[sec.offsets[k] + a * len + c] = m[(st + a, st + c)];
                    }
                }
            }
        };
        let scatter = |v: &[f64], m: &mut DMatrix<f64>| {
            for (k, &(st, len)) in self.ranges.iter().enumerate() {
                for a in 0..len {
                    for c in 0..len {
                        m[(st + a, st + c)] = v[sec.offsets[k] + a * len + c];
                    }
                }
            }
        };
        if lamb {
            let mut v = DVector::zeros(2 * nb);
            gather(&state.re, &mut v.as_mut_slice()[..nb]);
            gather(&state.im, &mut v.as_mut_slice()[nb..]);
            let w = &p.block * v;
            scatter(&w.as_slice()[..nb], &mut out.re);
            scatter(&w.as_slice()[nb..], &mut out.im);
        } else {
            for (src, dst) in [(&state.re, &mut out.re), (&state.im, &mut out.im)] {
                let mut v = DVector::zeros(nb);
                gather(src, v.as_mut_slice());
                let w = &p.block * v;
                scatter(w.as_slice(), dst);
            }
        }

        for (k, &(si, li)) in self.ranges.iter().enumerate() {
            if li != 1 {
                continue;
            }
            for (j, &(sj, lj)) in self.ranges.iter().enumerate() {
                if j == k || lj != 1 {
                    continue;
                }
                let z = C64::new(state.re[(si, sj)], state.im[(si, sj)]) * C64::new(p.scalar.re[(si, sj)], p.scalar.im[(si, sj)]);
                out.re[(si, sj)] = z.re;
                out.im[(si, sj)] = z.im;
            }
        }

        for ((i, j, _), m) in sec.pairs.iter().zip(&p.pairs) {
            let (si, li) = self.ranges[*i];
            let (sj, lj) = self.ranges[*j];
            let n = li * lj;
            let mut v = DVector::zeros(if lamb { 2 * n } else { n });
            let mut v_im = DVector::zeros(n);
            for a in 0..li {
                for c in 0..lj {
                    v[a * lj + c] = state.re[(si + a, sj + c)];
                    if lamb {
                        v[n + a * lj + c] = state.im[(si + a, sj + c)];
                    } else {
                        v_im[a * lj + c] = state.im[(si + a, sj + c)];
                    }
                }
            }
            let w = m * &v;
            let w_im = if lamb { w.rows(n, n).into_owned() } else { m * v_im };
            for a in 0..li {
                for c in 0..lj {
                    let (re, im) = (w[a * lj + c], w_im[a * lj + c]);
                    out.re[(si + a, sj + c)] = re;
                    out.im[(si + a, sj + c)] = im;
                    out.re[(sj + c, si + a)] = re;
                    out.im[(sj + c, si + a)] = -im;
                }
            }
        }
        out
    }

    /// Symmetric product of the exact piece exponentials.
    fn propagate_pieces(&self, state: &Split, tau: f64) -> Split {
        let pieces = self.pieces.as_ref().expect("checked by caller");
        let count = pieces.dephasing.len() + usize::from(pieces.lamb.is_some()) + pieces.transfers.len();
        let mut rho = state.clone();
        for k in (0..count).chain((0..count - 1).rev()) {
            let t = if k == count - 1 { tau } else { 0.5 * tau };
            rho = self.apply_piece(pieces, k, &rho, t);
        }
        rho
    }

    fn apply_piece(&self, pieces: &Pieces, k: usize, rho: &Split, tau: f64) -> Split {
        let nd = pieces.dephasing.len();
        if k < nd {
            let (vectors, l) = &pieces.dephasing[k];
            let g0 = self.gamma0;
            return self.block_flow(rho, vectors, |a, b| C64::new((-0.5 * g0 * (l[a] - l[b]).powi(2) * tau).exp(), 0.0));
        }
        if let (true, Some((vectors, h))) = (k == nd, pieces.lamb.as_ref()) {
            return self.block_flow(rho, vectors, |a, b| C64::new(0.0, -(h[a] - h[b]) * tau).exp());
        }
        let tr = &pieces.transfers[k - nd - usize::from(pieces.lamb.is_some())];
        self.transfer(rho, tr, tau)
    }

    /// Rotates every cluster block by `vectors`, multiplies elementwise by
    /// `factor`, and rotates back.
    fn block_flow(&self, rho: &Split, vectors: &[DMatrix<f64>], factor: impl Fn(usize, usize) -> C64) -> Split {
        let mut out = Split {
            re: self.rotate_blocks(&rho.re, vectors, false),
            im: self.rotate_blocks(&rho.im, vectors, false),
        };
        for b in 0..out.re.ncols() {
            for a in 0..out.re.nrows() {
                let z = C64::new(out.re[(a, b)], out.im[(a, b)]) * factor(a, b);
                out.re[(a, b)] = z.re;
                out.im[(a, b)] = z.im;
            }
        }
        Split {
            re: self.rotate_blocks(&out.re, vectors, true),
            im: self.rotate_blocks(&out.im, vectors, true),
        }
    }

    /// `WᵀmW` for the block-diagonal `W`, or `WmWᵀ` when `back`.
    fn rotate_blocks(&self, m: &DMatrix<f64>, vectors: &[DMatrix<f64>], back: bool) -> DMatrix<f64> {
        let mut out = m.clone();
        for (&(st, len), w) in self.ranges.iter().zip(vectors) {
            if len > 1 {
                rotate_slice(&mut out, st, w, back);
            }
        }
        out
    }

    /// Exact flow of the jumps out of one cluster: the block decays under
    /// `exp(−Rτ/2)` and whatever leaves lands in the target blocks, never to
    /// return within this piece.
    fn transfer(&self, rho: &Split, tr: &Transfer, tau: f64) -> Split {
        let (st, len) = self.ranges[tr.cluster];
        let mut out = rho.clone();
        rotate_slice(&mut out.re, st, &tr.basis, false);
        rotate_slice(&mut out.im, st, &tr.basis, false);
        // ∫₀^τ e^{−(r_a + r_b)t/2} dt
        let weight = DMatrix::from_fn(len, len, |a, b| {
            let x = -0.5 * (tr.rates[a] + tr.rates[b]) * tau;
            if x == 0.0 {
                tau
            } else {
                tau * x.exp_m1() / x
            }
        });
        let src_re = out.re.view((st, st), (len, len)).component_mul(&weight);
        let src_im = out.im.view((st, st), (len, len)).component_mul(&weight);
        for (k, y) in &tr.jumps {
            let (sk, lk) = self.ranges[*k];
            let mut o = out.re.view_mut((sk, sk), (lk, lk));
            o += y * &src_re * y.transpose();
            let mut o = out.im.view_mut((sk, sk), (lk, lk));
            o += y * &src_im * y.transpose();
        }
        let decay: Vec<f64> = tr.rates.iter().map(|&r| (-0.5 * r * tau).exp()).collect();
        for m in [&mut out.re, &mut out.im] {
            for (a, &d) in decay.iter().enumerate() {
                m.row_mut(st + a).scale_mut(d);
                m.column_mut(st + a).scale_mut(d);
            }
        }
        rotate_slice(&mut out.re, st, &tr.basis, true);
        rotate_slice(&mut out.im, st, &tr.basis, true);
        out
    }

    #[cfg(test)]
    fn propagate_taylor(&self, mut state: Split, tau: f64) -> Result<Split> {
        let block_norm = |b: &DMatrix<f64>| b.amax() * b.nrows() as f64;
        let g_norm = self.g.iter().map(block_norm).fold(0.0, f64::max);
        let l_norm = self.lamb.as_ref().map_or(0.0, |bl| bl.iter().map(block_norm).fold(0.0, f64::max));
        let x_norm = self
            .x
            .iter()
            .map(|xq| self.ranges.iter().map(|&(st, len)| block_norm(&xq.view((st, st), (len, len)).into_owned())).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let rate_bound = 2.0 * g_norm + 2.0 * l_norm + self.x.len() as f64 * self.gamma0 * x_norm * x_norm;
        let pieces = (rate_bound * tau / 0.5).ceil().max(1.0) as usize;
        let dt = tau / pieces as f64;
        for _ in 0..pieces {
            let mut term = state.clone();
            let mut k = 1;
            loop {
                term = self.apply(&term);
                let f = dt / k as f64;
                term.re *= f;
                term.im *= f;
                state.axpy(1.0, &term);
                if term.amax() < 1e-17 {
                    break;
                }
                k += 1;
                if k > 80 {
                    return Err(QacError::Numerical(format!(
                        "dissipator series did not converge (rate bound {rate_bound:e}, dt {dt:e} ns)"
                    )));
                }
            }
        }
        Ok(state)
    }
}

/// Rotates rows and columns `st..st + len` of `m` by `w` (`len × len`):
/// `Wᵀ` from the left and `W` from the right, or the inverse when `back`.
fn rotate_slice(m: &mut DMatrix<f64>, st: usize, w: &DMatrix<f64>, back: bool) {
    let len = w.nrows();
    let rows = if back { w * m.rows(st, len) } else { w.tr_mul(&m.rows(st, len)) };
    m.rows_mut(st, len).copy_from(&rows);
    let cols = if back { mul_t(&m.columns(st, len).into_owned(), w) } else { m.columns(st, len) * w };
    m.columns_mut(st, len).copy_from(&cols);
}

/// Adds `−i(H_I ρ − ρ H_J)` to a pair generator acting on stacked
/// `(re, im)` of an `li × lj` block.
fn embed_commutator(m: &mut DMatrix<f64>, n: usize, li: usize, lj: usize, hi: &DMatrix<f64>, hj: &DMatrix<f64>) {
    for r in 0..n {
        for c in 0..n {
            let v = m[(r, c)];
            m[(n + r, n + c)] = v;
        }
    }
    for a in 0..li {
        for c in 0..lj {
            let row = a * lj + c;
            for b in 0..li {
                let l = hi[(a, b)];
                m[(row, n + b * lj + c)] += l;
                m[(n + row, b * lj + c)] -= l;
            }
            for d in 0..lj {
                let r = hj[(d, c)];
                m[(row, n + a * lj + d)] -= r;
                m[(n + row, a * lj + d)] += r;
            }
        }
    }
}

/// `log M` for `M ∈ SO(n)` near the identity, as `asinh((M − Mᵀ)/2)`.
fn log_rotation(m: &DMatrix<f64>) -> DMatrix<f64> {
    let s = (m - m.transpose()) * 0.5;
    let s2 = &s * &s;
    let mut term = s.clone();
    let mut out = s;
    // asinh x = Σ (−1)^j (2j)! / (4^j (j!)² (2j + 1)) x^{2j+1}
    let mut coef = 1.0;
    for j in 1..200 {
        let jf = j as f64;
        coef *= -(2.0 * jf - 1.0) * (2.0 * jf) / (4.0 * jf * jf);
        term = &term * &s2;
        let c = coef / (2.0 * jf + 1.0);
        out += &term * c;
        if term.amax() * c.abs() < 1e-18 {
            break;
        }
    }
    out
}

/// `∫₀ʰ exp(i(w₀τ + (w₁ − w₀)τ²/(2h))) dτ`.
fn phase_integral(w0: f64, w1: f64, h: f64) -> C64 {
    let c = (w1 - w0) / (2.0 * h);
    let wmin = if w0.signum() == w1.signum() { w0.abs().min(w1.abs()) } else { 0.0 };
    if wmin * h > 20.0 && 2.0 * c.abs() < 0.02 * wmin * wmin {
        return phase_integral_asymptotic(w0, w1, h, c);
    }
    let pieces = ((w1 - w0).abs() * h / 0.05).ceil().clamp(1.0, 10_000.0) as usize;
    let d = h / pieces as f64;
    let mut total = C64::new(0.0, 0.0);
    for j in 0..pieces {
        let t = j as f64 * d;
        let phi = w0 * t + c * t * t;
        let w = w0 + 2.0 * c * (t + 0.5 * d);
        let x = 0.5 * w * d;
        let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
        total += C64::from_polar(d * sinc, phi + x);
    }
    total
}

/// Endpoint expansion of the chirped integral when the phase has no
/// stationary point: `Σ_k (−1)^k [e^{iφ} b_k]₀ʰ` with
/// `b_k = −i (2ic)^k (2k − 1)!! / w^{2k+1}`.
fn phase_integral_asymptotic(w0: f64, w1: f64, h: f64, c: f64) -> C64 {
    let end = C64::from_polar(1.0, w0 * h + c * h * h);
    let i = C64::new(0.0, 1.0);
    let mut coef = -i;
    let mut total = C64::new(0.0, 0.0);
    for k in 0..12 {
        let p = (2 * k + 1) as i32;
        let term = coef * (end / w1.powi(p) - 1.0 / w0.powi(p));
        if k % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
        if term.norm() < 1e-17 * total.norm() {
            break;
        }
        coef *= 2.0 * i * c * (2 * k + 1) as f64;
    }
    total
}

/// `exp(Ω)` for anti-Hermitian `Ω` by scaling and squaring.
fn expm(omega: &Split) -> Split {
    let n = omega.re.nrows();
    let norm = omega.re.abs().row_sum().max() + omega.im.abs().row_sum().max();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scale = 0.5f64.powi(squarings);
    let a = Split {
        re: &omega.re * scale,
        im: &omega.im * scale,
    };
    let mut out = Split {
        re: DMatrix::identity(n, n),
        im: DMatrix::zeros(n, n),
    };
    let mut term = out.clone();
    for k in 1..40 {
        term = term.mul(&a);
        let f = 1.0 / k as f64;
        term.re *= f;
        term.im *= f;
        out.axpy(1.0, &term);
        if term.amax() < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        out = out.mul(&out);
    }
    out
}

/// Non-adiabatic transport plus dynamical phases from `f0` to `f1` over `h`
/// ns; `f1` must be aligned to `f0`.
fn transport(f0: &Frame, f1: &Frame, h: f64, rho: &Split) -> Split {
    let dim = f0.energies.len();
    let k = log_rotation(&f0.basis.tr_mul(&f1.basis));
    let mut omega = Split::zeros(dim);
    for a in 0..dim {
        for b in a + 1..dim {
            let kab = k[(a, b)];
            if kab.abs() < 1e-15 {
                continue;
            }
            let w0 = f0.energies[a] - f0.energies[b];
            let w1 = f1.energies[a] - f1.energies[b];
            let v = phase_integral(w0, w1, h) * (-kab / h);
            omega.re[(a, b)] = v.re;
            omega.im[(a, b)] = v.im;
            omega.re[(b, a)] = -v.re;
            omega.im[(b, a)] = v.im;
        }
    }
    let u = expm(&omega);
    let mut out = u.mul(rho).mul_adjoint(&u);
    for a in 0..dim {
        for b in 0..dim {
            if a == b {
                continue;
            }
            let phase = -0.5 * h * ((f0.energies[a] - f0.energies[b]) + (f1.energies[a] - f1.energies[b]));
            let z = C64::new(out.re[(a, b)], out.im[(a, b)]) * C64::from_polar(1.0, phase);
            out.re[(a, b)] = z.re;
            out.im[(a, b)] = z.im;
        }
    }
    out.hermitize();
    out
}

struct Engine {
    parts: HamiltonianParts,
    bath: BathSpec,
    z: Vec<Vec<f64>>,
    lamb: Option<LambShiftTable>,
    tol: f64,
}

impl Engine {
    fn dissipator(&self, f: &Frame) -> Option<Dissipator> {
        (self.bath.kappa > 0.0).then(|| Dissipator::new(f, &self.z, &self.bath, self.lamb.as_ref(), self.tol, SECTOR_LIMIT))
    }

    fn dissipate(&self, d: &mut Option<Dissipator>, rho: &Split, tau: f64) -> Result<Split> {
        match d {
            Some(d) => {
                let mut out = d.propagate(rho, tau)?;
                out.hermitize();
                Ok(out)
            }
            None => Ok(rho.clone()),
        }
    }
}

pub fn evolve_open(
    physical: &IsingProblem,
    schedule: &dyn Coefficients,
    bath: &BathSpec,
    initial: &QuantumState,
    options: &OpenOptions,
) -> Result<OpenTrajectory> {
    bath.validate()?;
    let parts = HamiltonianParts::new(physical, options.cap)?;
    let n = parts.num_qubits();
    let dim = 1usize << n;
    if initial.dim() != dim {
        return Err(QacError::input(format!(
            "state dimension {} does not match {n} qubits",
            initial.dim()
        )));
    }
    match initial {
        QuantumState::Pure(v) if (v.norm() - 1.0).abs() > NORM_TOLERANCE => {
            return Err(QacError::input(format!("initial state norm is {}, expected 1", v.norm())));
        }
        QuantumState::Density(_) => initial.validate()?,
        _ => {}
    }
    let z: Vec<Vec<f64>> = (0..n)
        .map(|q| (0..dim).map(|i| if i >> q & 1 == 1 { -1.0 } else { 1.0 }).collect())
        .collect();
    let t_f = schedule.total_time_ns();
    let lamb = if options.lamb_shift && bath.kappa > 0.0 {
        // span every Bohr frequency the schedule can produce
        let scale = (0..=100)
            .map(|k| {
                let s = k as f64 / 100.0;
                schedule.a(s).abs() * n as f64 + schedule.b(s).abs() * parts.diag.iter().fold(0.0f64, |m, d| m.max(d.abs()))
            })
            .fold(0.0, f64::max);
        Some(LambShiftTable::new(bath, 2.0 * scale + 1.0, 8001))
    } else {
        None
    };
    let engine = Engine {
        parts,
        bath: *bath,
        z,
        lamb,
        tol: options.degeneracy_tolerance,
    };

    let landing = landing_points(&options.record, &[0.0, 1.0])?;
    let mut f0 = diagonalize(&engine.parts, schedule, 0.0);
    let (r0, i0) = split(&initial.to_density());
    let mut rho = Split { re: r0, im: i0 }.congruence(&f0.basis);
    rho.hermitize();
    let mut d0 = engine.dissipator(&f0);

    let mut points = Vec::new();
    let mut min_eig = f64::INFINITY;
    let record = |s: f64, f: &Frame, rho: &Split, points: &mut Vec<(f64, QuantumState)>, min_eig: &mut f64| {
        if options.check_positivity {
            *min_eig = min_eig.min(min_eigenvalue_split(&rho.re, &rho.im));
        }
        let lab = rho.congruence_t(&f.basis);
        points.push((s, QuantumState::Density(lab.re.zip_map(&lab.im, C64::new))));
    };
    if options.record.iter().any(|&r| r == 0.0) {
        record(0.0, &f0, &rho, &mut points, &mut min_eig);
    }

    let mut s = 0.0;
    let mut ds = options.initial_ds.min(options.max_ds);
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut max_trace_dev: f64 = 0.0;
    for &target in &landing {
        while s < target {
            if accepted + rejected >= options.max_steps {
                return Err(QacError::Numerical(format!(
                    "open evolution exceeded {} steps at s = {s}",
                    options.max_steps
                )));
            }
            let step = ds.min(target - s);
            let lands = target - s - step < 1e-15;
            let s1 = if lands { target } else { s + step };
            let h = (s1 - s) * t_f;

            let fm = diagonalize(&engine.parts, schedule, s + 0.5 * (s1 - s));
            let al = align(&mut f0, fm, engine.tol);
            if let Some(q) = al.old_rotation {
                rho = rho.congruence(&q);
                d0 = engine.dissipator(&f0);
            }
            let mut fm = al.new;
            let mut quality = al.min_overlap;
            let f1 = diagonalize(&engine.parts, schedule, s1);
            let al = align(&mut fm, f1, engine.tol);
            quality = quality.min(al.min_overlap);
            let f1 = al.new;

            let mut err = f64::INFINITY;
            let mut candidate = None;
            if quality > 0.7 {
                let mut dm = engine.dissipator(&fm);
                let mut d1 = engine.dissipator(&f1);
                let half = engine.dissipate(&mut d0, &rho, 0.25 * h)?;
                let half = transport(&f0, &fm, 0.5 * h, &half);
                let half = engine.dissipate(&mut dm, &half, 0.5 * h)?;
                let half = transport(&fm, &f1, 0.5 * h, &half);
                let half = engine.dissipate(&mut d1, &half, 0.25 * h)?;
                let full = engine.dissipate(&mut d0, &rho, 0.5 * h)?;
                let full = transport(&f0, &f1, h, &full);
                let full = engine.dissipate(&mut d1, &full, 0.5 * h)?;
                err = full.frobenius_distance(&half);
                candidate = Some((half, d1));
            }
            let ok = err <= options.tolerance;
            if ok {
                let (half, d1) = candidate.expect("computed when error is finite");
                rho = half;
                f0 = f1;
                d0 = d1;
                s = s1;
                accepted += 1;
                max_trace_dev = max_trace_dev.max((rho.trace() - 1.0).abs());
            } else {
                rejected += 1;
            }
            let factor = if err == 0.0 {
                2.0
            } else if err.is_finite() {
                (0.9 * (options.tolerance / err).powf(1.0 / 3.0)).clamp(0.2, 2.0)
            } else {
                0.25
            };
            if !ok || step == ds {
                ds = (ds * factor).min(options.max_ds);
            }
            if ds < options.min_ds {
                return Err(QacError::Numerical(format!(
                    "open evolution step fell to {ds:e} at s = {s} (error {err:e}, frame overlap {quality:.3})"
                )));
            }
        }
        if options.record.iter().any(|&r| (r - target).abs() < 1e-15) || target == 1.0 {
            record(target, &f0, &rho, &mut points, &mut min_eig);
        }
    }
    Ok(OpenTrajectory {
        trajectory: Trajectory {
            points,
            accepted_steps: accepted,
            rejected_steps: rejected,
        },
        max_trace_deviation: max_trace_dev,
        min_eigenvalue: min_eig,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::closed::{evolve_closed, ClosedOptions};
    use crate::dynamics::schedule::ConstantCoefficients;
    use crate::dynamics::spectrum::spectrum_of_matrix;
    use crate::problem::{make_af_chain, schedule_linear};

    fn small_problem() -> IsingProblem {
        let mut p = make_af_chain(3).unwrap();
        p.set_field(0, 0.3).unwrap();
        p.set_coupling(1, 2, 0.6).unwrap();
        p
    }

    #[test]
    fn log_rotation_inverts_exponential() {
        let k = DMatrix::from_fn(5, 5, |i, j| if i < j { 0.03 * (i + 2 * j) as f64 } else if i > j { -0.03 * (j + 2 * i) as f64 } else { 0.0 });
        let m = expm(&Split { re: k.clone(), im: DMatrix::zeros(5, 5) }).re;
        assert!((log_rotation(&m) - k).amax() < 1e-14);
    }

    #[test]
    fn phase_integral_closed_form() {
        let (w, h) = (3.7, 2.0);
        let exact = (C64::new(0.0, w * h).exp() - 1.0) / C64::new(0.0, w);
        assert!((phase_integral(w, w, h) - exact).norm() < 1e-13);
        // chirped: compare with fine midpoint quadrature
        let (w0, w1) = (1.0, 9.0);
        let n = 200_000;
        let mut q = C64::new(0.0, 0.0);
        for k in 0..n {
            let t = (k as f64 + 0.5) * h / n as f64;
            q += C64::from_polar(h / n as f64, w0 * t + (w1 - w0) * t * t / (2.0 * h));
        }
        assert!((phase_integral(w0, w1, h) - q).norm() < 1e-5);
    }

    #[test]
    fn asymptotic_phase_integral() {
        let (w0, w1, h) = (5.0, 6.0, 10.0);
        let n = 400_000;
        let mut q = C64::new(0.0, 0.0);
        for k in 0..n {
            let t = (k as f64 + 0.5) * h / n as f64;
            q += C64::from_polar(h / n as f64, w0 * t + (w1 - w0) * t * t / (2.0 * h));
        }
        let a = phase_integral(w0, w1, h);
        assert!((a - q).norm() < 1e-8, "{a} vs {q}");
        assert!((phase_integral_asymptotic(-w0, -w1, h, -(w1 - w0) / (2.0 * h)) - q.conj()).norm() < 1e-8);
    }

    fn sector_vs_taylor(problem: &IsingProblem, s: f64, lamb: bool) {
        let parts = HamiltonianParts::new(problem, 8).unwrap();
        let n = parts.num_qubits();
        let dim = 1 << n;
        let sched = schedule_linear(1.0, 1.0).unwrap();
        let frame = diagonalize(&parts, &sched, s);
        let z: Vec<Vec<f64>> = (0..n)
            .map(|q| (0..dim).map(|i| if i >> q & 1 == 1 { -1.0 } else { 1.0 }).collect())
            .collect();
        let bath = BathSpec::with_kappa(0.05);
        let table = lamb.then(|| LambShiftTable::new(&bath, 60.0, 4001));
        let mut d = Dissipator::new(&frame, &z, &bath, table.as_ref(), 1e-6, SECTOR_LIMIT);
        assert!(d.sectors.is_some());
        let multiplets = d.ranges.iter().filter(|r| r.1 > 1).count();
        // a generic Hermitian state
        let mut rho = Split::zeros(dim);
        for a in 0..dim {
            for b in 0..dim {
                let v = ((a * 7 + b * 3) % 11) as f64 / 11.0 + if a == b { 1.0 } else { 0.0 };
                rho.re[(a, b)] += v;
                rho.re[(b, a)] += v;
                let w = ((a * 5 + b) % 7) as f64 / 7.0;
                rho.im[(a, b)] += w;
                rho.im[(b, a)] -= w;
            }
        }
        for tau in [0.3, 3.0] {
            let exact = d.propagate(&rho, tau).unwrap();
            let perm = Split {
                re: d.permute(&rho.re),
                im: d.permute(&rho.im),
            };
            let t = d.propagate_taylor(perm, tau).unwrap();
            let t = Split {
                re: d.unpermute(&t.re),
                im: d.unpermute(&t.im),
            };
            let dist = exact.frobenius_distance(&t);
            assert!(dist < 1e-10 * rho.re.norm(), "tau {tau}: {dist:e}, {multiplets} multiplets");
        }
        // cached squaring agrees with a direct exponential
        let p2 = d.propagator(0.6).unwrap();
        d.cache.clear();
        let p2d = d.propagator(0.6).unwrap();
        assert!((p2.block - p2d.block).amax() < 1e-12);
    }

    #[test]
    fn sector_exponentials_match_taylor() {
        sector_vs_taylor(&small_problem(), 0.6, false);
        sector_vs_taylor(&small_problem(), 0.6, true);
        // a uniform ring has degenerate multiplets
        let mut ring = make_af_chain(4).unwrap();
        ring.set_coupling(0, 3, 1.0).unwrap();
        sector_vs_taylor(&ring, 0.4, false);
        sector_vs_taylor(&ring, 0.4, true);
    }

    #[test]
    fn split_dissipator_converges_to_taylor() {
        let mut ring = make_af_chain(4).unwrap();
        ring.set_coupling(0, 3, 1.0).unwrap();
        let parts = HamiltonianParts::new(&ring, 8).unwrap();
        let dim = 16;
        let sched = schedule_linear(1.0, 1.0).unwrap();
        let z: Vec<Vec<f64>> = (0..4)
            .map(|q| (0..dim).map(|i| if i >> q & 1 == 1 { -1.0 } else { 1.0 }).collect())
            .collect();
        let bath = BathSpec::with_kappa(0.05);
        let rho = Split {
            re: DMatrix::from_fn(dim, dim, |a, b| if a == b { 1.0 / dim as f64 } else { 0.01 / (1.0 + (a + b) as f64) }),
            im: DMatrix::from_fn(dim, dim, |a, b| 0.003 * (a as f64 - b as f64) / dim as f64),
        };
        for (s, lamb) in [(0.97, false), (0.97, true), (0.5, false), (0.0, true)] {
            let frame = diagonalize(&parts, &sched, s);
            let table = lamb.then(|| LambShiftTable::new(&bath, 60.0, 4001));
            let d = Dissipator::new(&frame, &z, &bath, table.as_ref(), 1e-6, 0);
            assert!(d.pieces.is_some());
            let perm = Split {
                re: d.permute(&rho.re),
                im: d.permute(&rho.im),
            };
            let errs: Vec<f64> = [0.1, 0.05]
                .iter()
                .map(|&tau| {
                    let split = d.propagate_pieces(&perm, tau);
                    let taylor = d.propagate_taylor(perm.clone(), tau).unwrap();
                    split.frobenius_distance(&taylor)
                })
                .collect();
            assert!(errs[0] < 1e-3, "s {s}: {errs:?}");
            // second-order splitting: local error falls eightfold
            assert!(errs[1] < 1e-14 || errs[0] / errs[1] > 6.0, "s {s}: {errs:?}");
        }
    }

    #[test]
    fn split_dissipator_is_positive_and_trace_preserving() {
        let mut ring = make_af_chain(4).unwrap();
        ring.set_coupling(0, 3, 1.0).unwrap();
        let parts = HamiltonianParts::new(&ring, 8).unwrap();
        let dim = 16;
        let sched = schedule_linear(1.0, 1.0).unwrap();
        let z: Vec<Vec<f64>> = (0..4)
            .map(|q| (0..dim).map(|i| if i >> q & 1 == 1 { -1.0 } else { 1.0 }).collect())
            .collect();
        let bath = BathSpec::with_kappa(0.05);
        // rank one, so any loss of positivity shows up as a negative eigenvalue
        let v: Vec<C64> = (0..dim).map(|k| C64::new(1.0 + k as f64, 0.5 * k as f64 - 3.0)).collect();
        let norm: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        let pure = DMatrix::from_fn(dim, dim, |a, b| v[a] * v[b].conj() / norm);
        let (re, im) = split(&pure);
        for s in [0.0, 0.97, 1.0] {
            let frame = diagonalize(&parts, &sched, s);
            let table = LambShiftTable::new(&bath, 60.0, 4001);
            let d = Dissipator::new(&frame, &z, &bath, Some(&table), 1e-6, 0);
            for tau in [0.3, 30.0] {
                let out = d.propagate_pieces(&Split { re: re.clone(), im: im.clone() }, tau);
                assert!((out.trace() - 1.0).abs() < 1e-12, "s {s} τ {tau}: trace {}", out.trace());
                let m = min_eigenvalue_split(&out.re, &out.im);
                assert!(m > -1e-13, "s {s} τ {tau}: {m}");
            }
        }
    }

    #[test]
    fn zero_coupling_matches_closed() {
        let p = small_problem();
        let sched = schedule_linear(1.0, 0.004).unwrap();
        let init = QuantumState::driver_ground(3);
        let closed = evolve_closed(&p, &sched, &init, &ClosedOptions::default()).unwrap();
        let opts = OpenOptions { record: vec![0.5], ..Default::default() };
        let open = evolve_open(&p, &sched, &BathSpec::default(), &init, &opts).unwrap();
        let QuantumState::Pure(psi) = closed.final_state() else { panic!() };
        let f = open.final_state().fidelity_with_pure(psi);
        assert!(f > 1.0 - 1e-6, "fidelity {f}");
        // fast enough that about a third of the population leaves the ground state
        assert!(open.final_state().populations()[5] < 0.7);
        assert!(open.max_trace_deviation < 1e-8);
        assert!(open.min_eigenvalue > -1e-6);
    }

    #[test]
    fn detailed_balance_fixed_point() {
        let mut p = IsingProblem::new(1);
        p.set_field(0, 1.0).unwrap();
        let (a, b) = (0.6, 0.8);
        let coeffs = ConstantCoefficients { a, b, duration_ns: 5000.0 };
        let bath = BathSpec::with_kappa(1e-3);
        let open = evolve_open(&p, &coeffs, &bath, &QuantumState::basis(1, 0), &OpenOptions::default()).unwrap();
        let h = DMatrix::from_row_slice(2, 2, &[b, a, a, -b]);
        let sp = spectrum_of_matrix(&h, 2).unwrap();
        let QuantumState::Density(rho) = open.final_state() else { panic!() };
        let pop = |k: usize| {
            let v = sp.vectors.column(k).map(|x| C64::new(x, 0.0));
            (v.adjoint() * rho * &v)[(0, 0)].re
        };
        let w10 = sp.values[1] - sp.values[0];
        let expected = bath_rate(-w10, &bath) / bath_rate(w10, &bath);
        let ratio = pop(1) / pop(0);
        assert!((ratio - expected).abs() < 1e-4, "{ratio} vs {expected}");
        assert!(open.max_trace_deviation < 1e-8);
    }

    #[test]
    fn caps_and_inputs() {
        let p = make_af_chain(9).unwrap();
        let sched = schedule_linear(1.0, 1.0).unwrap();
        let r = evolve_open(&p, &sched, &BathSpec::default(), &QuantumState::driver_ground(9), &OpenOptions::default());
        assert!(matches!(r, Err(QacError::Resource { .. })));
        let bad = BathSpec { temperature: 0.0, ..Default::default() };
        let p = make_af_chain(2).unwrap();
        assert!(evolve_open(&p, &sched, &bad, &QuantumState::driver_ground(2), &OpenOptions::default()).is_err());
    }
}
