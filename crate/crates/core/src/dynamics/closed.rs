//! Closed-system Schrödinger evolution in the computational basis.
//!
//! Fourth-order commutator-free Magnus steps: each step applies two
//! exponentials of real symmetric combinations of `H` at the Gauss points.
//! Their action on the state is a Taylor series in bit-flip matrix-vector
//! products, summed to machine precision. Step doubling controls the local
//! error.

use nalgebra::{DMatrix, DVector};

use super::operator::{check_cap, ising_diagonal, transverse_plus_diagonal, DEFAULT_HAMILTONIAN_CAP};
use super::schedule::Coefficients;
use super::state::{QuantumState, C64, NORM_TOLERANCE};
use crate::error::{QacError, Result};
use crate::problem::IsingProblem;

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedOptions {
    /// Local error tolerance on the state vector (2-norm).
    pub tolerance: f64,
    /// First trial step in `s`.
    pub initial_ds: f64,
    pub min_ds: f64,
    pub max_steps: usize,
    /// Values of `s` at which the state is recorded; `s = 1` always is.
    pub record: Vec<f64>,
    pub cap: usize,
}

impl Default for ClosedOptions {
    fn default() -> Self {
        ClosedOptions {
            tolerance: 1e-10,
            initial_ds: 1e-4,
            min_ds: 1e-14,
            max_steps: 50_000_000,
            record: Vec::new(),
            cap: DEFAULT_HAMILTONIAN_CAP,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Recorded `(s, state)` pairs in increasing `s`, ending at `s = 1`.
    pub points: Vec<(f64, QuantumState)>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &QuantumState {
        &self.points.last().expect("trajectory ends at s = 1").1
    }
}

/// `A(s)`/`B(s)` split of the Hamiltonian: `H = A·X + B·diag(d)`.
#[derive(Debug, Clone)]
pub(crate) struct HamiltonianParts {
    pub x: DMatrix<f64>,
    pub diag: Vec<f64>,
}

impl HamiltonianParts {
    pub fn new(physical: &IsingProblem, cap: usize) -> Result<Self> {
        let n = physical.num_spins();
        check_cap(n, cap, "qubits for dynamics")?;
        Ok(HamiltonianParts {
            x: transverse_plus_diagonal(&vec![1.0; n], &vec![0.0; 1 << n]),
            diag: ising_diagonal(physical),
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.diag.len().trailing_zeros() as usize
    }

    pub fn combine(&self, a: f64, b: f64) -> DMatrix<f64> {
        let mut h = &self.x * a;
        for (i, d) in self.diag.iter().enumerate() {
            h[(i, i)] += b * d;
        }
        h
    }
}

/// Landing points: record values and schedule kinks inside `(0, 1]`.
pub(crate) fn landing_points(record: &[f64], breakpoints: &[f64]) -> Result<Vec<f64>> {
    if record.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(QacError::input("record points must lie in [0, 1]"));
    }
    let mut pts: Vec<f64> = record.iter().chain(breakpoints).copied().filter(|&s| s > 0.0).collect();
    pts.push(1.0);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    Ok(pts)
}

pub fn evolve_closed(
    physical: &IsingProblem,
    schedule: &dyn Coefficients,
    initial: &QuantumState,
    options: &ClosedOptions,
) -> Result<Trajectory> {
    let parts = HamiltonianParts::new(physical, options.cap)?;
    let psi0 = match initial {
        QuantumState::Pure(v) => v.clone(),
        QuantumState::Density(_) => return Err(QacError::input("closed evolution needs a pure state")),
    };
    if psi0.len() != parts.diag.len() {
        return Err(QacError::input(format!(
            "state dimension {} does not match {} qubits",
            psi0.len(),
            parts.num_qubits()
        )));
    }
    if (psi0.norm() - 1.0).abs() > NORM_TOLERANCE {
        return Err(QacError::input(format!("initial state norm is {}, expected 1", psi0.norm())));
    }
    let landing = landing_points(&options.record, &schedule.breakpoints())?;
    let record_at = |s: f64| options.record.iter().any(|&r| (r - s).abs() < 1e-15) || s == 1.0;

    let t_f = schedule.total_time_ns();
    let mut points = Vec::new();
    if options.record.iter().any(|&r| r == 0.0) {
        points.push((0.0, QuantumState::Pure(psi0.clone())));
    }
    let mut psi = psi0;
    let mut s = 0.0;
    let mut ds = options.initial_ds;
    let (mut accepted, mut rejected) = (0usize, 0usize);
    for &target in &landing {
        while s < target {
            if accepted + rejected >= options.max_steps {
                return Err(QacError::Numerical(format!(
                    "closed evolution exceeded {} steps at s = {s}",
                    options.max_steps
                )));
            }
            let step = ds.min(target - s);
            let full = cfm4_step(&parts, schedule, t_f, s, step, &psi);
            let half = cfm4_step(&parts, schedule, t_f, s, step / 2.0, &psi);
            let half = cfm4_step(&parts, schedule, t_f, s + step / 2.0, step / 2.0, &half);
            let err = (&full - &half).norm();
            if err <= options.tolerance {
                psi = half;
                s = if target - s - step < 1e-15 { target } else { s + step };
                accepted += 1;
            } else {
                rejected += 1;
            }
            let factor = if err == 0.0 { 4.0 } else { (0.9 * (options.tolerance / err).powf(0.2)).clamp(0.2, 4.0) };
            // only grow from steps that were not truncated by a landing point
            if err > options.tolerance || step == ds {
                ds *= factor;
            }
            if ds < options.min_ds {
                return Err(QacError::Numerical(format!(
                    "closed evolution step fell to {ds:e} at s = {s} (error {err:e})"
                )));
            }
        }
        if record_at(target) {
            points.push((target, QuantumState::Pure(psi.clone())));
        }
    }
    Ok(Trajectory {
        points,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}

const C_LO: f64 = 0.5 - 0.288_675_134_594_812_9;
const C_HI: f64 = 0.5 + 0.288_675_134_594_812_9;
const W_BIG: f64 = 0.25 + 0.288_675_134_594_812_9;
const W_SMALL: f64 = 0.25 - 0.288_675_134_594_812_9;

fn cfm4_step(
    parts: &HamiltonianParts,
    sched: &dyn Coefficients,
    t_f: f64,
    s: f64,
    ds: f64,
    psi: &DVector<C64>,
) -> DVector<C64> {
    let (s1, s2) = (s + C_LO * ds, s + C_HI * ds);
    let (a1, b1, a2, b2) = (sched.a(s1), sched.b(s1), sched.a(s2), sched.b(s2));
    let h = ds * t_f;
    let mid = parts.expm_i_apply(W_BIG * a1 + W_SMALL * a2, W_BIG * b1 + W_SMALL * b2, h, psi);
    parts.expm_i_apply(W_SMALL * a1 + W_BIG * a2, W_SMALL * b1 + W_BIG * b2, h, &mid)
}

impl HamiltonianParts {
    /// `(a·X + b·diag)·v` without forming the matrix; `X = Σ_q σˣ_q`.
    fn apply(&self, a: f64, b: f64, v: &DVector<C64>) -> DVector<C64> {
        let n = self.num_qubits();
        DVector::from_fn(v.len(), |i, _| {
            let flips: C64 = (0..n).map(|q| v[i ^ (1 << q)]).sum();
            flips * a + v[i] * (b * self.diag[i])
        })
    }

    /// `exp(−i·h·(a·X + b·diag))·ψ`, split into substeps with
    /// `h‖M‖ ≤ 1` each so that the series terms only shrink.
    fn expm_i_apply(&self, a: f64, b: f64, h: f64, psi: &DVector<C64>) -> DVector<C64> {
        let d_max = self.diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let bound = a.abs() * self.num_qubits() as f64 + b.abs() * d_max;
        let substeps = (h.abs() * bound).ceil().max(1.0) as usize;
        let tau = h / substeps as f64;
        let theta = tau.abs() * bound;
        let mut out = psi.clone();
        for _ in 0..substeps {
            let mut term = out.clone();
            // a priori bound θᵏ/k! on the k-th term relative to ‖ψ‖
            let mut scale = 1.0;
            for k in 1.. {
                term = self.apply(a, b, &term) * C64::new(0.0, -tau / k as f64);
                out += &term;
                scale *= theta / k as f64;
                if scale < 1e-17 {
                    break;
                }
            }
        }
        out
    }
}

/// `exp(−i·h·M)·ψ` for real symmetric `M`, by diagonalization.
#[cfg(test)]
fn expm_i_dense(m: DMatrix<f64>, h: f64, psi: &DVector<C64>) -> DVector<C64> {
    let eig = m.symmetric_eigen();
    let v = &eig.eigenvectors;
    let re: DVector<f64> = psi.map(|z| z.re);
    let im: DVector<f64> = psi.map(|z| z.im);
    let (cr, ci) = (v.tr_mul(&re), v.tr_mul(&im));
    let mut yr = DVector::zeros(cr.len());
    let mut yi = DVector::zeros(cr.len());
    for k in 0..cr.len() {
        let (sn, cs) = (-h * eig.eigenvalues[k]).sin_cos();
        yr[k] = cs * cr[k] - sn * ci[k];
        yi[k] = sn * cr[k] + cs * ci[k];
    }
    let (or, oi) = (v * yr, v * yi);
    or.zip_map(&oi, C64::new)
}
