//! Closed-form gap models for a linear schedule: the location of the minimum
//! gap, a single logical qubit with its penalty to first order in `β`, and
//! three antiferromagnetic pairs sharing a penalty qubit to second order.
//!
//! Every model lives on `A(s) = 2A0(1 − s)`, `B(s) = 2A0 s` written as
//! `A0(1 − s) Σσˣ + A0 s H_P`. Exact diagonalization oracles of the full
//! 16- and 128-dimensional models are provided alongside.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::dynamics::operator::{diagonal_from_terms, transverse_plus_diagonal};
use crate::dynamics::spectrum_of_matrix;
use crate::error::{QacError, Result};

/// Denominators below this multiple of `A0` are reported as degeneracies.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbParams {
    pub a0: f64,
    /// Splitting of each problem qubit.
    pub omega: f64,
    /// Splitting of the penalty qubit.
    pub omega0: f64,
    pub beta: f64,
    pub s: f64,
}

impl PerturbParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a0 > 0.0 && self.a0.is_finite()) {
            return Err(QacError::input(format!("A0 = {} must be positive", self.a0)));
        }
        if !(0.0..=1.0).contains(&self.s) {
            return Err(QacError::input(format!("s = {} outside [0, 1]", self.s)));
        }
        for (name, v) in [("omega", self.omega), ("omega0", self.omega0), ("beta", self.beta)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(QacError::input(format!("{name} = {v} must be finite and nonnegative")));
            }
        }
        Ok(())
    }

    /// True when the penalty splitting is not small against the problem
    /// splitting, so the penalty qubit need not stay in its ground state.
    pub fn omega0_warning(&self) -> bool {
        self.omega0 >= self.omega
    }

    pub fn with_s(self, s: f64) -> Self {
        PerturbParams { s, ..self }
    }

    pub fn with_beta(self, beta: f64) -> Self {
        PerturbParams { beta, ..self }
    }
}

/// Minimum-gap location `1/(1 + α)` of an `α`-scaled chain under the linear
/// schedule.
pub fn s_min_linear(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(QacError::input(format!("alpha = {alpha} must be positive")));
    }
    Ok(1.0 / (1.0 + alpha))
}

/// `2·A0·Δ0·α/(1 + α)`, with `Δ0` the minimum gap of the unscaled chain.
pub fn delta_min_linear(alpha: f64, a0: f64, delta0: f64) -> Result<f64> {
    let s = s_min_linear(alpha)?;
    if !(a0 > 0.0 && delta0 >= 0.0) {
        return Err(QacError::input("A0 must be positive and Δ0 nonnegative"));
    }
    Ok(2.0 * a0 * delta0 * alpha * s)
}

/// Eigendata of `A0(1 − s)σˣ + A0 s (ω/2) σᶻ` in the basis `(↑, ↓)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitEigs {
    /// `√(4(1 − s)² + s²ω²)`.
    pub lambda: f64,
    /// `∓A0·λ/2`.
    pub e_minus: f64,
    pub e_plus: f64,
    pub v_minus: [f64; 2],
    pub v_plus: [f64; 2],
    /// Norms of the unnormalized component vectors.
    pub c_minus: f64,
    pub c_plus: f64,
}

impl QubitEigs {
    /// `⟨ε₋|σᶻ|ε₋⟩ = (c₋² − 2)/c₋²`.
    pub fn z_minus(&self) -> f64 {
        let c2 = self.c_minus * self.c_minus;
        (c2 - 2.0) / c2
    }

    /// `⟨ε₊|σᶻ|ε₊⟩`.
    pub fn z_plus(&self) -> f64 {
        self.v_plus[0] * self.v_plus[0] - self.v_plus[1] * self.v_plus[1]
    }

    /// `⟨ε₋|σᶻ|ε₊⟩`.
    pub fn z_cross(&self) -> f64 {
        self.v_minus[0] * self.v_plus[0] - self.v_minus[1] * self.v_plus[1]
    }
}

fn qubit_eigs(a0: f64, omega: f64, s: f64) -> Result<QubitEigs> {
    let lambda = (4.0 * (1.0 - s).powi(2) + (s * omega).powi(2)).sqrt();
    let sum = s * omega + lambda;
    if sum < DEGENERACY_TOLERANCE {
        return Err(QacError::Numerical(format!(
            "qubit levels are degenerate at s = {s} with splitting {omega}"
        )));
    }
    // (sω − λ)/(2(1 − s)) rewritten without the 1 − s denominator
    let x = -2.0 * (1.0 - s) / sum;
    let c_minus = (x * x + 1.0).sqrt();
    let plus = [sum / 2.0, 1.0 - s];
    let c_plus = plus[0].hypot(plus[1]);
    Ok(QubitEigs {
        lambda,
        e_minus: -0.5 * a0 * lambda,
        e_plus: 0.5 * a0 * lambda,
        v_minus: [x / c_minus, 1.0 / c_minus],
        v_plus: [plus[0] / c_plus, plus[1] / c_plus],
        c_minus,
        c_plus,
    })
}

/// Eigendata of one problem qubit (splitting `ω`).
pub fn single_qubit_eigs(params: &PerturbParams) -> Result<QubitEigs> {
    params.validate()?;
    qubit_eigs(params.a0, params.omega, params.s)
}

/// Eigendata of the penalty qubit (splitting `ω₀`).
pub fn penalty_qubit_eigs(params: &PerturbParams) -> Result<QubitEigs> {
    params.validate()?;
    qubit_eigs(params.a0, params.omega0, params.s)
}

/// Gap between the ground state and the triplet of single problem-qubit
/// excitations of three problem qubits and one penalty qubit, to first order
/// in the coupling `−A0 s β Σ σᶻ_i σᶻ_4`.
pub fn logical_qubit_perturbed_gap(params: &PerturbParams) -> Result<f64> {
    let q = single_qubit_eigs(params)?;
    let p = penalty_qubit_eigs(params)?;
    let (c2m, c2p, t2m) = (q.c_minus.powi(2), q.c_plus.powi(2), p.c_minus.powi(2));
    let one_s = 1.0 - params.s;
    let shift = params.beta
        * params.s
        * ((c2p - 2.0 * one_s * one_s) / c2p + (2.0 - c2m) / c2m)
        * ((2.0 - t2m) / t2m);
    Ok(params.a0 * (q.lambda + shift))
}

/// Eigendata of `A0(1 − s)(σˣ₁ + σˣ₂) + A0 s σᶻ₁σᶻ₂` in the basis
/// `↑↑, ↑↓, ↓↑, ↓↓`; energies in units of `A0` are `−λ, −s, s, λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEigs {
    /// `√(4(1 − s)² + s²)`.
    pub lambda: f64,
    /// Energies in units of `A0`, ascending.
    pub levels: [f64; 4],
    pub vectors: [[f64; 4]; 4],
    pub c_minus: f64,
    pub c_plus: f64,
}

impl PairEigs {
    /// `⟨ε₀|σᶻ₁|ε₂⟩ = −√2(1 − s)/c₋`.
    pub fn z02(&self, s: f64) -> f64 {
        -(2f64.sqrt()) * (1.0 - s) / self.c_minus
    }

    /// `⟨ε₃|σᶻ₁|ε₂⟩ = −√2/c₊`.
    pub fn z32(&self) -> f64 {
        -(2f64.sqrt()) / self.c_plus
    }

    /// `⟨ε₀|σᶻ₁|ε₁⟩ = (s + λ)/(√2 c₋)`.
    pub fn z01(&self, s: f64) -> f64 {
        (s + self.lambda) / (2f64.sqrt() * self.c_minus)
    }
}

pub fn two_site_eigs(s: f64) -> Result<PairEigs> {
    if !(0.0..=1.0).contains(&s) {
        return Err(QacError::input(format!("s = {s} outside [0, 1]")));
    }
    let lambda = (4.0 * (1.0 - s).powi(2) + s * s).sqrt();
    let a = -(s + lambda) / 2.0;
    // (λ − s)/(2(1 − s)) rewritten without the 1 − s denominator
    let b = 2.0 * (1.0 - s) / (lambda + s);
    let ground = [1.0 - s, a, a, 1.0 - s];
    let top = [1.0, b, b, 1.0];
    let norm = |v: &[f64; 4]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (c_minus, c_plus) = (norm(&ground), norm(&top));
    let r = 1.0 / 2f64.sqrt();
    Ok(PairEigs {
        lambda,
        levels: [-lambda, -s, s, lambda],
        vectors: [
            ground.map(|x| x / c_minus),
            [0.0, -r, r, 0.0],
            [-r, 0.0, 0.0, r],
            top.map(|x| x / c_plus),
        ],
        c_minus,
        c_plus,
    })
}

fn term(name: &str, numerator: f64, denominator: f64) -> Result<f64> {
    if denominator.abs() < DEGENERACY_TOLERANCE {
        return Err(QacError::Numerical(format!(
            "vanishing denominator {denominator:e} in the {name} term"
        )));
    }
    Ok(numerator / denominator)
}

/// Second-order energy shifts `(δE₀, δE₂)` of the coupled-pairs model.
pub fn coupled_pairs_shifts(params: &PerturbParams) -> Result<(f64, f64)> {
    params.validate()?;
    let s = params.s;
    if s * params.beta == 0.0 {
        // the coupling vanishes identically
        return Ok((0.0, 0.0));
    }
    let pair = two_site_eigs(s)?;
    let pen = penalty_qubit_eigs(params)?;
    let [e0, e1, e2, e3] = pair.levels;
    let flip = -pen.lambda;
    let dd = pen.z_minus().powi(2);
    let ud = pen.z_cross().powi(2);
    let m02 = pair.z02(s).powi(2);
    let m01 = pair.z01(s).powi(2);
    let m32 = pair.z32().powi(2);

    let d0 = 3.0 * term("ε0−ε2", m02 * dd, e0 - e2)?
        + 3.0 * term("ε0−ε2+ε̃−−ε̃+", m02 * ud, e0 - e2 + flip)?
        + 3.0 * term("ε0−ε1", m01 * dd, e0 - e1)?
        + 3.0 * term("ε0−ε1+ε̃−−ε̃+", m01 * ud, e0 - e1 + flip)?;
    let d2 = term("ε2−ε0", m02 * dd, e2 - e0)?
        + term("ε2−ε0+ε̃−−ε̃+", m02 * ud, e2 - e0 + flip)?
        + 2.0 * term("ε0−ε2", m02 * dd, e0 - e2)?
        + 2.0 * term("ε0−ε2+ε̃−−ε̃+", m02 * ud, e0 - e2 + flip)?
        + term("ε2−ε3", m32 * dd, e2 - e3)?
        + term("ε2−ε3+ε̃−−ε̃+", m32 * ud, e2 - e3 + flip)?
        + 2.0 * term("ε0−ε1", m01 * dd, e0 - e1)?
        + 2.0 * term("ε0−ε1+ε̃−−ε̃+", m01 * ud, e0 - e1 + flip)?;
    let scale = params.beta * params.beta * params.a0 * s * s;
    Ok((scale * d0, scale * d2))
}

/// Gap of three antiferromagnetic pairs whose first qubits couple to a
/// penalty qubit through `−A0 s β Σ σᶻ_{1i} σᶻ_4`, to second order in `β`.
/// The unperturbed gap is `A0(ε₂ − ε₀) = A0(s + λ)`.
pub fn coupled_pairs_perturbed_gap(params: &PerturbParams) -> Result<f64> {
    let (d0, d2) = coupled_pairs_shifts(params)?;
    let pair = two_site_eigs(params.s)?;
    Ok(params.a0 * (pair.levels[2] - pair.levels[0]) + d2 - d0)
}

/// Product state over consecutive qubit groups; within a group the first
/// qubit is the most significant local index, and bit 1 is `↓`.
fn product_state(factors: &[&[f64]]) -> DVector<f64> {
    let widths: Vec<usize> = factors.iter().map(|f| f.len().trailing_zeros() as usize).collect();
    let n: usize = widths.iter().sum();
    DVector::from_fn(1 << n, |i, _| {
        let mut q = 0;
        let mut amp = 1.0;
        for (f, &w) in factors.iter().zip(&widths) {
            let local = (0..w).fold(0, |acc, j| acc << 1 | (i >> (q + j) & 1));
            amp *= f[local];
            q += w;
        }
        amp
    })
}

/// Energies of the exact levels that overlap most with each target subspace:
/// the ground reference gets one level, the excited subspace as many levels
/// as it has vectors, and their centroid is returned.
fn projected_gap(h: &DMatrix<f64>, ground: &DVector<f64>, excited: &[DVector<f64>]) -> Result<f64> {
    let spec = spectrum_of_matrix(h, 0)?;
    let weight = |targets: &[&DVector<f64>], k: usize| {
        let v = spec.vectors.column(k);
        targets.iter().map(|t| t.dot(&v).powi(2)).sum::<f64>()
    };
    let levels = spec.values.len();
    let best = |targets: &[&DVector<f64>], count: usize| {
        let mut order: Vec<usize> = (0..levels).collect();
        order.sort_by(|&a, &b| weight(targets, b).total_cmp(&weight(targets, a)));
        order[..count].iter().map(|&k| spec.values[k]).sum::<f64>() / count as f64
    };
    let excited: Vec<&DVector<f64>> = excited.iter().collect();
    Ok(best(&excited, excited.len()) - best(&[ground], 1))
}

/// Exact counterpart of [`logical_qubit_perturbed_gap`]: the 16-dimensional
/// Hamiltonian diagonalized, with the excited energy the centroid of the
/// three levels continuing the single-excitation triplet.
pub fn logical_qubit_exact_gap(params: &PerturbParams) -> Result<f64> {
    let q = single_qubit_eigs(params)?;
    let p = penalty_qubit_eigs(params)?;
    let (a0, s) = (params.a0, params.s);
    let mut fields: Vec<(usize, f64)> = (0..3).map(|i| (i, a0 * s * params.omega / 2.0)).collect();
    fields.push((3, a0 * s * params.omega0 / 2.0));
    let couplings: Vec<(usize, usize, f64)> = (0..3).map(|i| (i, 3, -a0 * s * params.beta)).collect();
    let h = transverse_plus_diagonal(&[a0 * (1.0 - s); 4], &diagonal_from_terms(4, &fields, &couplings));
    let (m, u, pm) = (&q.v_minus[..], &q.v_plus[..], &p.v_minus[..]);
    let ground = product_state(&[m, m, m, pm]);
    let excited = [
        product_state(&[u, m, m, pm]),
        product_state(&[m, u, m, pm]),
        product_state(&[m, m, u, pm]),
    ];
    projected_gap(&h, &ground, &excited)
}

/// Exact counterpart of [`coupled_pairs_perturbed_gap`] on the 128-dimensional
/// space; pair `i` occupies qubits `2i, 2i + 1` and the penalty qubit is 6.
pub fn coupled_pairs_exact_gap(params: &PerturbParams) -> Result<f64> {
    params.validate()?;
    let pair = two_site_eigs(params.s)?;
    let p = penalty_qubit_eigs(params)?;
    let (a0, s) = (params.a0, params.s);
    let fields = [(6, a0 * s * params.omega0 / 2.0)];
    let mut couplings = Vec::new();
    for i in 0..3 {
        couplings.push((2 * i, 2 * i + 1, a0 * s));
        couplings.push((2 * i, 6, -a0 * s * params.beta));
    }
    let h = transverse_plus_diagonal(&[a0 * (1.0 - s); 7], &diagonal_from_terms(7, &fields, &couplings));
    let (g, x, pm) = (&pair.vectors[0][..], &pair.vectors[2][..], &p.v_minus[..]);
    let ground = product_state(&[g, g, g, pm]);
    let excited = [
        product_state(&[x, g, g, pm]),
        product_state(&[g, x, g, pm]),
        product_state(&[g, g, x, pm]),
    ];
    projected_gap(&h, &ground, &excited)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbModel {
    LogicalQubit,
    CoupledPairs,
}

impl PerturbModel {
    pub fn perturbed_gap(self, params: &PerturbParams) -> Result<f64> {
        match self {
            PerturbModel::LogicalQubit => logical_qubit_perturbed_gap(params),
            PerturbModel::CoupledPairs => coupled_pairs_perturbed_gap(params),
        }
    }

    pub fn exact_gap(self, params: &PerturbParams) -> Result<f64> {
        match self {
            PerturbModel::LogicalQubit => logical_qubit_exact_gap(params),
            PerturbModel::CoupledPairs => coupled_pairs_exact_gap(params),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapPoint {
    pub s: f64,
    pub perturbed: f64,
    pub exact: f64,
}

/// Perturbative and exact gaps on `s_k = k/(points − 1)`; grid points where
/// the perturbative expression is degenerate are skipped.
pub fn gap_curve(model: PerturbModel, params: &PerturbParams, points: usize) -> Result<Vec<GapPoint>> {
    if points < 2 {
        return Err(QacError::input("a gap curve needs at least two points"));
    }
    params.validate()?;
    let mut out = Vec::with_capacity(points);
    for k in 0..points {
        let p = params.with_s(k as f64 / (points - 1) as f64);
        let perturbed = match model.perturbed_gap(&p) {
            Ok(g) => g,
            Err(QacError::Numerical(_)) => continue,
            Err(e) => return Err(e),
        };
        out.push(GapPoint {
            s: p.s,
            perturbed,
            exact: model.exact_gap(&p)?,
        });
    }
    Ok(out)
}

pub fn gap_curve_csv(curve: &[GapPoint]) -> String {
    let mut out = String::from("s,gap_perturbed,gap_exact\n");
    for p in curve {
        let _ = writeln!(out, "{},{},{}", p.s, p.perturbed, p.exact);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(omega: f64, omega0: f64, beta: f64, s: f64) -> PerturbParams {
        PerturbParams { a0: 1.0, omega, omega0, beta, s }
    }

    fn sigma_z1(v: &[f64; 4], w: &[f64; 4]) -> f64 {
        v[0] * w[0] + v[1] * w[1] - v[2] * w[2] - v[3] * w[3]
    }

    fn sigma_z2(v: &[f64; 4], w: &[f64; 4]) -> f64 {
        v[0] * w[0] - v[1] * w[1] + v[2] * w[2] - v[3] * w[3]
    }

    #[test]
    fn minimum_gap_location() {
        assert_eq!(s_min_linear(1.0).unwrap(), 0.5);
        assert!(s_min_linear(1e-9).unwrap() > 1.0 - 1e-8);
        assert!(s_min_linear(0.0).is_err());
        assert!((delta_min_linear(1.0, 2.0, 0.5).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn qubit_endpoints() {
        let e = single_qubit_eigs(&params(1.3, 0.1, 0.0, 0.0)).unwrap();
        assert_eq!((e.e_minus, e.e_plus), (-1.0, 1.0));
        let r = 1.0 / 2f64.sqrt();
        assert!((e.v_minus[0] + r).abs() < 1e-15 && (e.v_minus[1] - r).abs() < 1e-15);
        assert!((e.v_plus[0] - r).abs() < 1e-15 && (e.v_plus[1] - r).abs() < 1e-15);
        let e = single_qubit_eigs(&PerturbParams { a0: 2.0, ..params(1.3, 0.1, 0.0, 1.0) }).unwrap();
        assert!((e.e_plus - 1.3).abs() < 1e-15 && (e.e_minus + 1.3).abs() < 1e-15);
        assert!(matches!(single_qubit_eigs(&params(0.0, 0.1, 0.0, 1.0)), Err(QacError::Numerical(_))));
    }

    #[test]
    fn qubit_eigs_match_diagonalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let (s, omega, a0) = (rng.gen_range(0.0..1.0), rng.gen_range(0.01..3.0), rng.gen_range(0.5..2.0));
            let e = single_qubit_eigs(&PerturbParams { a0, ..params(omega, 0.0, 0.0, s) }).unwrap();
            let h = DMatrix::from_row_slice(2, 2, &[a0 * s * omega / 2.0, a0 * (1.0 - s), a0 * (1.0 - s), -a0 * s * omega / 2.0]);
            let spec = spectrum_of_matrix(&h, 0).unwrap();
            assert!((spec.values[0] - e.e_minus).abs() < 1e-12);
            assert!((spec.values[1] - e.e_plus).abs() < 1e-12);
            let (vm, vp) = (DVector::from_row_slice(&e.v_minus), DVector::from_row_slice(&e.v_plus));
            assert!((&h * &vm - &vm * e.e_minus).norm() < 1e-12);
            assert!((&h * &vp - &vp * e.e_plus).norm() < 1e-12);
            assert!((vm.norm() - 1.0).abs() < 1e-12 && (vp.norm() - 1.0).abs() < 1e-12);
            assert!(vm.dot(&vp).abs() < 1e-12);
            assert!((e.z_minus() - (vm[0] * vm[0] - vm[1] * vm[1])).abs() < 1e-12);
            let c2 = e.c_plus * e.c_plus;
            assert!((e.z_plus() - (c2 - 2.0 * (1.0 - s).powi(2)) / c2).abs() < 1e-12);
        }
    }

    #[test]
    fn logical_gap_unperturbed_and_sign() {
        for k in 0..=20 {
            let p = params(1.0, 0.1, 0.0, k as f64 / 20.0);
            let g = logical_qubit_perturbed_gap(&p).unwrap();
            assert!((g - single_qubit_eigs(&p).unwrap().lambda).abs() < 1e-15);
            assert!(logical_qubit_perturbed_gap(&p.with_beta(0.1)).unwrap() >= g);
        }
    }

    fn argmin(model: PerturbModel, p: PerturbParams) -> (f64, f64) {
        (1..20000)
            .map(|k| {
                let s = k as f64 / 20000.0;
                (s, model.perturbed_gap(&p.with_s(s)).unwrap())
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
    }

    #[test]
    fn logical_minimum_rises_and_moves_earlier() {
        let p = params(1.0, 0.1, 0.0, 0.0);
        let (s0, g0) = argmin(PerturbModel::LogicalQubit, p);
        let (s1, g1) = argmin(PerturbModel::LogicalQubit, p.with_beta(0.1));
        assert!(g1 > g0 && s1 < s0, "{s0} {g0} {s1} {g1}");
    }

    #[test]
    fn logical_gap_first_order_accuracy() {
        let p = params(1.0, 0.1, 0.0, 0.4);
        assert!((logical_qubit_exact_gap(&p).unwrap() - logical_qubit_perturbed_gap(&p).unwrap()).abs() < 1e-12);
        let err = |b: f64| {
            let q = p.with_beta(b);
            (logical_qubit_exact_gap(&q).unwrap() - logical_qubit_perturbed_gap(&q).unwrap()).abs()
        };
        let e: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&b| err(b)).collect();
        assert!(e[0] > e[1] && e[1] > e[2]);
        let ratio = e[1] / e[2];
        assert!((3.0..=5.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn pair_eigendata() {
        for k in 0..=10 {
            let s = k as f64 / 10.0;
            let pair = two_site_eigs(s).unwrap();
            let h = DMatrix::from_row_slice(
                4,
                4,
                &[
                    s, 1.0 - s, 1.0 - s, 0.0,
                    1.0 - s, -s, 0.0, 1.0 - s,
                    1.0 - s, 0.0, -s, 1.0 - s,
                    0.0, 1.0 - s, 1.0 - s, s,
                ],
            );
            for (v, &e) in pair.vectors.iter().zip(&pair.levels) {
                let v = DVector::from_row_slice(v);
                assert!((&h * &v - &v * e).norm() < 1e-12);
                assert!((v.norm() - 1.0).abs() < 1e-12);
            }
            let v = &pair.vectors;
            for i in 0..4 {
                assert!(sigma_z1(&v[i], &v[i]).abs() < 1e-12 && sigma_z2(&v[i], &v[i]).abs() < 1e-12);
            }
            assert!((sigma_z1(&v[0], &v[2]) - pair.z02(s)).abs() < 1e-12);
            assert!((sigma_z1(&v[3], &v[2]) - pair.z32()).abs() < 1e-12);
            assert!((sigma_z1(&v[0], &v[1]) - pair.z01(s)).abs() < 1e-12);
            assert!(sigma_z1(&v[1], &v[2]).abs() < 1e-12);
            // the ε3–ε1 element does not vanish, but no ε2 or ε0 state reaches
            // it, so it never enters the shifts
            let z31 = -(2f64.sqrt()) * v[3][1];
            assert!((sigma_z1(&v[3], &v[1]) - z31).abs() < 1e-12);
        }
    }

    #[test]
    fn pairs_unperturbed_gap_matches_exact() {
        for s in [0.1, 0.3, 0.7, 0.9] {
            let p = params(0.0, 0.001, 0.0, s);
            let pair = two_site_eigs(s).unwrap();
            let g = coupled_pairs_perturbed_gap(&p).unwrap();
            assert!((g - (s + pair.lambda)).abs() < 1e-15);
            assert!((coupled_pairs_exact_gap(&p).unwrap() - g).abs() < 1e-10);
        }
    }

    #[test]
    fn pairs_gap_rises_and_moves_later() {
        let p = params(0.0, 0.001, 0.0, 0.0);
        for k in 1..20 {
            let q = p.with_s(k as f64 / 20.0);
            assert!(coupled_pairs_perturbed_gap(&q.with_beta(0.1)).unwrap() > coupled_pairs_perturbed_gap(&q).unwrap());
        }
        let (s0, g0) = argmin(PerturbModel::CoupledPairs, p);
        let (s1, g1) = argmin(PerturbModel::CoupledPairs, p.with_beta(0.1));
        assert!(g1 > g0 && s1 > s0, "{s0} {g0} {s1} {g1}");
    }

    #[test]
    fn pairs_gap_converges() {
        let p = params(0.0, 0.1, 0.0, 0.3);
        let err = |b: f64| {
            let q = p.with_beta(b);
            (coupled_pairs_exact_gap(&q).unwrap() - coupled_pairs_perturbed_gap(&q).unwrap()).abs()
        };
        let e: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&b| err(b)).collect();
        assert!(e[0] > e[1] && e[1] > e[2], "{e:?}");
        // odd orders vanish under the flip of every pair, so the leftover is
        // fourth order
        assert!(e[1] / e[2] > 12.0, "{e:?}");
    }

    #[test]
    fn degeneracy_is_flagged() {
        let err = coupled_pairs_perturbed_gap(&params(0.0, 0.1, 0.1, 1.0)).unwrap_err();
        assert!(err.to_string().contains("ε0−ε1"), "{err}");
    }

    #[test]
    fn curve_csv() {
        let curve = gap_curve(PerturbModel::CoupledPairs, &params(0.0, 0.1, 0.1, 0.0), 5).unwrap();
        assert_eq!(curve.len(), 4, "{curve:?}");
        let csv = gap_curve_csv(&curve);
        assert!(csv.starts_with("s,gap_perturbed,gap_exact\n0,"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn validation() {
        assert!(params(1.0, 0.1, 0.1, 1.5).validate().is_err());
        assert!(PerturbParams { a0: 0.0, ..params(1.0, 0.1, 0.1, 0.5) }.validate().is_err());
        assert!(params(1.0, 1.0, 0.1, 0.5).omega0_warning());
        assert!(!params(1.0, 0.1, 0.1, 0.5).omega0_warning());
    }
}
