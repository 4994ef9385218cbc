//! Parallel execution of a sweep grid.

use std::collections::BTreeMap;
use std::time::Instant;

use qac_core::decode::{Classifier, SampleRecord, SampleSet};
use qac_core::dynamics::{
    evolve_closed, evolve_open, gap_profile, sample_readout, success_probabilities_with, BathSpec, ClosedOptions,
    GapProfile, LevelPolicy, OpenOptions, QuantumState,
};
use qac_core::problem::{encode_problem, make_af_chain, AnnealSchedule, EncodedProblem, Strategy};
use qac_core::{QacError, Result};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::config::{LoadedConfig, Mode, SweepConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub strategy: Strategy,
    pub alpha: f64,
    pub beta: f64,
    pub n: usize,
    pub embedding_id: usize,
}

impl GridPoint {
    /// Identifies the point up to the embedding.
    pub fn setting(&self) -> Setting {
        Setting {
            strategy: self.strategy,
            alpha: self.alpha.to_bits(),
            beta: self.beta.to_bits(),
            n: self.n,
        }
    }

    /// Seed for this point's readout sampling; independent of grid order.
    pub fn seed(&self, base: u64) -> u64 {
        let key = format!(
            "{base}:{}:{}:{}:{}:{}",
            self.strategy, self.alpha, self.beta, self.n, self.embedding_id
        );
        let digest = Sha256::digest(key.as_bytes());
        u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
    }
}

/// A grid point without its embedding, ordered for stable output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Setting {
    pub strategy: Strategy,
    alpha: u64,
    beta: u64,
    pub n: usize,
}

impl Setting {
    pub fn alpha(&self) -> f64 {
        f64::from_bits(self.alpha)
    }

    pub fn beta(&self) -> f64 {
        f64::from_bits(self.beta)
    }

    /// File-name stem such as `QAC_a0.3_b0.2_n2`.
    pub fn stem(&self) -> String {
        format!("{}_a{}_b{}_n{}", self.strategy, self.alpha(), self.beta(), self.n)
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub p_gs: f64,
    pub p_s: f64,
    /// The success measure of the strategy: `p_s` when it decodes, `p_gs`
    /// otherwise.
    pub success: f64,
    pub gap: Option<GapProfile>,
    pub samples: Option<SampleSet>,
    /// Largest trace deviation and smallest eigenvalue of ρ (open runs).
    pub trace_deviation: Option<f64>,
    pub min_eigenvalue: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PointResult {
    pub point: GridPoint,
    pub outcome: std::result::Result<Outcome, String>,
    /// Wall-clock seconds.
    pub runtime: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub points: Vec<PointResult>,
}

/// Mean and standard error `σ/√S` (with `σ² = Σ(x − x̄)²/S`) over
/// the successful embeddings of one setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub mean: f64,
    pub standard_error: f64,
    pub count: usize,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let s = values.len() as f64;
        let mean = values.iter().sum::<f64>() / s;
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / s;
        Some(Aggregate {
            mean,
            standard_error: (var / s).sqrt(),
            count: values.len(),
        })
    }
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.outcome.is_err()).count()
    }

    /// Success statistics per setting, in setting order.
    pub fn aggregates(&self) -> BTreeMap<Setting, Aggregate> {
        let mut values: BTreeMap<Setting, Vec<f64>> = BTreeMap::new();
        for p in &self.points {
            let entry = values.entry(p.point.setting()).or_default();
            if let Ok(o) = &p.outcome {
                entry.push(o.success);
            }
        }
        values
            .into_iter()
            .filter_map(|(k, v)| Aggregate::of(&v).map(|a| (k, a)))
            .collect()
    }

    /// `β_opt` per `(strategy, α, N)`: the β of largest mean success, the
    /// smaller β on ties.
    pub fn beta_opt(&self) -> BTreeMap<(Strategy, u64, usize), (f64, Aggregate)> {
        let mut best: BTreeMap<(Strategy, u64, usize), (f64, Aggregate)> = BTreeMap::new();
        for (k, a) in self.aggregates() {
            let key = (k.strategy, k.alpha, k.n);
            let better = match best.get(&key) {
                None => true,
                Some((b, cur)) => a.mean > cur.mean || (a.mean == cur.mean && k.beta() < *b),
            };
            if better {
                best.insert(key, (k.beta(), a));
            }
        }
        best
    }
}

/// Expands the grid in (strategy, α, β, N, embedding) order. U and C run at
/// β = 0 only.
pub fn grid_points(config: &SweepConfig) -> Result<Vec<GridPoint>> {
    let g = &config.grid;
    let mut out = Vec::new();
    for strategy in config.strategies()? {
        let betas: &[f64] = if strategy.has_penalty() { &g.beta } else { &[0.0] };
        for &alpha in &g.alpha {
            for &beta in betas {
                for &n in &g.n {
                    for embedding_id in 0..g.embeddings {
                        out.push(GridPoint {
                            strategy,
                            alpha,
                            beta,
                            n,
                            embedding_id,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Grid points with the same physical Hamiltonian: EP and QAC differ only in
/// how the readout is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct PhysicsKey {
    layout: u8,
    alpha: u64,
    beta: u64,
    n: usize,
    embedding_id: usize,
}

impl PhysicsKey {
    fn of(p: &GridPoint) -> Self {
        PhysicsKey {
            layout: match p.strategy {
                Strategy::Unencoded => 0,
                Strategy::Classical => 1,
                Strategy::EnergyPenalty | Strategy::Qac => 2,
            },
            alpha: p.alpha.to_bits(),
            beta: p.beta.to_bits(),
            n: p.n,
            embedding_id: p.embedding_id,
        }
    }
}

/// Final state and diagnostics of one anneal.
struct Evolved {
    state: QuantumState,
    trace_deviation: Option<f64>,
    min_eigenvalue: Option<f64>,
    gap: Option<GapProfile>,
}

/// Runs every grid point on `config.jobs` threads. Points sharing a physical
/// Hamiltonian share one anneal, whose runtime is reported for each of them.
/// Failures of individual points are recorded in the result; only invalid
/// configurations fail.
pub fn run_sweep(loaded: &LoadedConfig) -> Result<SweepResult> {
    let config = &loaded.config;
    config.validate()?;
    let schedule = loaded.schedule()?;
    let points = grid_points(config)?;
    let mut groups: BTreeMap<PhysicsKey, Vec<usize>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        groups.entry(PhysicsKey::of(p)).or_default().push(i);
    }
    let groups: Vec<Vec<usize>> = groups.into_values().collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| QacError::Configuration(format!("thread pool: {e}")))?;
    let done: Vec<Vec<(usize, PointResult)>> = pool.install(|| {
        groups
            .par_iter()
            .map(|members| {
                let start = Instant::now();
                let evolved = evolve_point(&points[members[0]], config, &schedule);
                let shared = start.elapsed().as_secs_f64();
                members
                    .iter()
                    .map(|&i| {
                        let point = points[i].clone();
                        let start = Instant::now();
                        let outcome = evolved
                            .as_ref()
                            .map_err(|e| e.to_string())
                            .and_then(|ev| read_out(&point, ev, config).map_err(|e| e.to_string()));
                        let runtime = shared + start.elapsed().as_secs_f64();
                        (i, PointResult { point, outcome, runtime })
                    })
                    .collect()
            })
            .collect()
    });
    let mut flat: Vec<(usize, PointResult)> = done.into_iter().flatten().collect();
    flat.sort_by_key(|(i, _)| *i);
    Ok(SweepResult {
        points: flat.into_iter().map(|(_, r)| r).collect(),
    })
}

fn encoded(point: &GridPoint) -> Result<EncodedProblem> {
    let encoding = point.strategy.compact_encoding(point.n)?;
    encode_problem(
        &make_af_chain(point.n)?,
        point.strategy,
        point.alpha,
        point.beta,
        encoding.as_ref(),
    )
}

fn evolve_point(point: &GridPoint, config: &SweepConfig, schedule: &AnnealSchedule) -> Result<Evolved> {
    let problem = encoded(point)?;
    let initial = QuantumState::driver_ground(problem.num_physical());
    let run = &config.run;
    let gap = if run.gap_points >= 2 {
        Some(gap_profile(&problem, schedule, run.gap_points, LevelPolicy::default())?)
    } else {
        None
    };
    match run.mode {
        Mode::Open => {
            let bath = BathSpec {
                kappa: config.bath.kappa,
                omega_c: config.bath.omega_c,
                temperature: config.bath.temperature,
                cutoff: config.bath.cutoff.into(),
            };
            let options = OpenOptions {
                tolerance: run.tolerance(),
                lamb_shift: config.bath.lamb_shift,
                ..Default::default()
            };
            let traj = evolve_open(problem.physical(), schedule, &bath, &initial, &options)?;
            Ok(Evolved {
                state: traj.final_state().clone(),
                trace_deviation: Some(traj.max_trace_deviation),
                min_eigenvalue: Some(traj.min_eigenvalue),
                gap,
            })
        }
        Mode::Closed => {
            let options = ClosedOptions {
                tolerance: run.tolerance(),
                ..Default::default()
            };
            let traj = evolve_closed(problem.physical(), schedule, &initial, &options)?;
            Ok(Evolved {
                state: traj.final_state().clone(),
                trace_deviation: None,
                min_eigenvalue: None,
                gap,
            })
        }
    }
}

fn read_out(point: &GridPoint, evolved: &Evolved, config: &SweepConfig) -> Result<Outcome> {
    let classifier = Classifier::new(&encoded(point)?)?;
    let shots = config.run.shots;
    let (p_gs, p_s, samples) = if shots > 0 {
        let drawn = sample_readout(&evolved.state, shots, point.seed(config.seed))?;
        let mut samples = SampleSet::new(drawn.num_qubits());
        let (mut gs, mut s) = (0u64, 0u64);
        for r in drawn.records() {
            if classifier.is_physical_ground(&r.bits)? {
                gs += r.count;
            }
            if classifier.decodes_to_ground(&r.bits)? {
                s += r.count;
            }
            samples.push(SampleRecord {
                embedding_id: point.embedding_id,
                ..r.clone()
            })?;
        }
        (gs as f64 / shots as f64, s as f64 / shots as f64, Some(samples))
    } else {
        let sp = success_probabilities_with(&evolved.state, &classifier)?;
        (sp.p_gs, sp.p_s, None)
    };
    Ok(Outcome {
        p_gs,
        p_s,
        success: if point.strategy.decodes() { p_s } else { p_gs },
        gap: evolved.gap.clone(),
        samples,
        trace_deviation: evolved.trace_deviation,
        min_eigenvalue: evolved.min_eigenvalue,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_uses_population_variance() {
        let a = Aggregate::of(&[0.2, 0.4]).unwrap();
        assert!((a.mean - 0.3).abs() < 1e-15);
        // σ = 0.1, S = 2
        assert!((a.standard_error - 0.1 / 2f64.sqrt()).abs() < 1e-15);
        assert!(Aggregate::of(&[]).is_none());
    }

    #[test]
    fn seeds_depend_on_the_point_only() {
        let p = GridPoint {
            strategy: Strategy::Qac,
            alpha: 0.3,
            beta: 0.2,
            n: 2,
            embedding_id: 0,
        };
        let q = GridPoint { embedding_id: 1, ..p.clone() };
        assert_eq!(p.seed(5), p.clone().seed(5));
        assert_ne!(p.seed(5), q.seed(5));
        assert_ne!(p.seed(5), p.seed(6));
    }

    fn result(rows: &[(f64, f64)]) -> SweepResult {
        SweepResult {
            points: rows
                .iter()
                .map(|&(beta, success)| PointResult {
                    point: GridPoint {
                        strategy: Strategy::Qac,
                        alpha: 0.3,
                        beta,
                        n: 2,
                        embedding_id: 0,
                    },
                    outcome: Ok(Outcome {
                        p_gs: success,
                        p_s: success,
                        success,
                        gap: None,
                        samples: None,
                        trace_deviation: None,
                        min_eigenvalue: None,
                    }),
                    runtime: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn beta_opt_prefers_smaller_beta_on_ties() {
        let r = result(&[(0.3, 0.9), (0.1, 0.5), (0.2, 0.9)]);
        let best = r.beta_opt();
        let (beta, agg) = best[&(Strategy::Qac, 0.3f64.to_bits(), 2)];
        assert_eq!((beta, agg.mean), (0.2, 0.9));
    }
}
