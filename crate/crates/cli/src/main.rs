use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qac_cli::{emit_report, exit_code, run_sweep, LoadedConfig};
use qac_core::classical::{exponential_fit, kink_distribution, lorentzian_fit, no_kink_probability, KinkModel};
use qac_core::decode::{histogram_suite, Classifier, HistogramSuite, SampleSet};
use qac_core::dynamics::{
    evolve_closed, evolve_open, gap_profile, sample_readout, success_probabilities, trajectory_csv, BathSpec,
    ClosedOptions, CutoffMode, LevelPolicy, OpenOptions, QuantumState, Trajectory,
};
use qac_core::perturb::{gap_curve, gap_curve_csv, PerturbModel, PerturbParams};
use qac_core::problem::{
    encode_problem, make_af_chain, schedule_from_table, schedule_linear, AnnealSchedule, EncodedProblem, Strategy,
};
use qac_core::topology::{
    build_chimera, build_encoding, contains_k33_subdivision, embed_chain, validate_k33, HardwareGraph, SimpleGraph,
};
use qac_core::{QacError, Result};

#[derive(Parser)]
#[command(name = "qac", version, about = "Quantum annealing correction toolkit")]
struct Cli {
    /// Sweep configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// RNG seed; overrides the configuration's.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; without it single-file outputs go to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a Chimera hardware graph.
    Chimera(ChimeraArgs),
    /// Lay out encoded logical qubits on a Chimera graph, optionally
    /// embedding chains.
    Encode(EncodeArgs),
    /// Search a graph for a K3,3 subdivision.
    Planarity(PlanarityArgs),
    /// Instantaneous gap profile of an encoded chain.
    Gap(GapArgs),
    /// Anneal an encoded chain and report success probabilities.
    Evolve(EvolveArgs),
    /// Run a configured parameter sweep.
    Sweep,
    /// Decode readout samples and build error histograms.
    Decode(DecodeArgs),
    /// Kink-count distribution of the classical chain model.
    Kinkmodel(KinkArgs),
    /// Fit success-vs-length data with the Lorentzian and exponential forms.
    Fit(FitArgs),
    /// Perturbative and exact gaps of the small penalized models.
    Perturb(PerturbArgs),
}

#[derive(Args)]
struct LatticeArgs {
    #[arg(long, default_value_t = 8)]
    rows: usize,
    #[arg(long, default_value_t = 8)]
    cols: usize,
    /// Comma-separated inactive qubit ids.
    #[arg(long, value_delimiter = ',')]
    defects: Vec<usize>,
    /// Read the hardware graph from a file instead.
    #[arg(long, conflicts_with_all = ["rows", "cols", "defects"])]
    graph: Option<PathBuf>,
}

impl LatticeArgs {
    fn hardware(&self, cell_size: usize) -> Result<HardwareGraph> {
        match &self.graph {
            Some(p) => HardwareGraph::parse(&std::fs::read_to_string(p)?),
            None => build_chimera(
                self.rows,
                self.cols,
                cell_size,
                &self.defects.iter().copied().collect::<BTreeSet<_>>(),
            ),
        }
    }
}

#[derive(Args)]
struct ChimeraArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
    #[arg(long, default_value_t = 4)]
    cell_size: usize,
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Length of logical chains to embed.
    #[arg(long)]
    chain: Option<usize>,
    /// Number of distinct embeddings to find.
    #[arg(long, default_value_t = 1, requires = "chain")]
    count: usize,
}

#[derive(Args)]
struct PlanarityArgs {
    /// Edge-list graph file; defaults to the encoded Chimera graph.
    #[arg(long)]
    edges: Option<PathBuf>,
    #[command(flatten)]
    lattice: LatticeArgs,
}

#[derive(Args)]
struct ProblemArgs {
    #[arg(long, default_value = "QAC")]
    strategy: Strategy,
    #[arg(long, default_value_t = 0.3)]
    alpha: f64,
    /// Penalty strength; ignored (0) for U and C.
    #[arg(long, default_value_t = 0.2)]
    beta: f64,
    /// Logical chain length.
    #[arg(long, default_value_t = 2)]
    n: usize,
}

impl ProblemArgs {
    fn problem(&self) -> Result<EncodedProblem> {
        let beta = if self.strategy.has_penalty() { self.beta } else { 0.0 };
        let encoding = self.strategy.compact_encoding(self.n)?;
        encode_problem(&make_af_chain(self.n)?, self.strategy, self.alpha, beta, encoding.as_ref())
    }
}

#[derive(Args)]
struct ScheduleArgs {
    /// Schedule table (CSV of s,A_GHz,B_GHz).
    #[arg(long, conflicts_with = "a0")]
    schedule: Option<PathBuf>,
    /// Linear schedule A = 2 a0 (1 - s), B = 2 a0 s, used without a table.
    #[arg(long, default_value_t = 1.0)]
    a0: f64,
    /// Anneal time in microseconds.
    #[arg(long, default_value_t = 20.0)]
    t_f: f64,
}

impl ScheduleArgs {
    fn schedule(&self) -> Result<AnnealSchedule> {
        match &self.schedule {
            Some(p) => schedule_from_table(&std::fs::read_to_string(p)?, self.t_f),
            None => schedule_linear(self.a0, self.t_f),
        }
    }
}

#[derive(Args)]
struct GapArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long, default_value_t = 201)]
    points: usize,
    /// Fixed excited level; by default the first level above the final
    /// ground manifold.
    #[arg(long)]
    level: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CutoffArg {
    AsPrinted,
    Symmetric,
}

#[derive(Args)]
struct EvolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    schedule: ScheduleArgs,
    /// Closed-system evolution (no bath).
    #[arg(long)]
    closed: bool,
    #[arg(long, default_value_t = 3.18e-4)]
    kappa: f64,
    #[arg(long, default_value_t = 2.2)]
    temperature: f64,
    #[arg(long, default_value_t = 8.0 * std::f64::consts::PI)]
    omega_c: f64,
    #[arg(long, value_enum, default_value = "as-printed")]
    cutoff: CutoffArg,
    #[arg(long)]
    lamb_shift: bool,
    /// Per-step tolerance; defaults to 1e-6 open and 1e-10 closed.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Comma-separated values of s at which to record the state.
    #[arg(long, value_delimiter = ',')]
    record: Vec<f64>,
    /// Instantaneous gaps per recorded point in the trajectory file.
    #[arg(long, default_value_t = 3)]
    gaps: usize,
    /// Readout samples to draw from the final state.
    #[arg(long, default_value_t = 0)]
    shots: u64,
}

#[derive(Args)]
struct DecodeArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Sample file (embedding_id,count,bits).
    #[arg(long)]
    samples: PathBuf,
    /// Average per-position statistics over both chain directions.
    #[arg(long)]
    symmetrize: bool,
}

#[derive(Args)]
struct KinkArgs {
    #[arg(long)]
    alpha: f64,
    /// Temperature in units of the logical coupling.
    #[arg(long)]
    temperature: f64,
    #[arg(long)]
    n: usize,
}

#[derive(Args)]
struct FitArgs {
    /// CSV of `n,probability` rows.
    #[arg(long)]
    data: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Logical,
    Pairs,
}

#[derive(Args)]
struct PerturbArgs {
    #[arg(long, value_enum, default_value = "logical")]
    model: ModelArg,
    #[arg(long, default_value_t = 1.0)]
    a0: f64,
    /// Splitting ω of each problem qubit.
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    /// Splitting ω0 of the penalty qubit.
    #[arg(long, default_value_t = 0.1)]
    omega0: f64,
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    #[arg(long, default_value_t = 101)]
    points: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    if cli.config.is_some() && !matches!(cli.command, Command::Sweep) {
        return Err(QacError::Configuration("--config is only read by `sweep`".into()));
    }
    if cli.jobs == Some(0) {
        return Err(QacError::Configuration("--jobs must be at least 1".into()));
    }
    match &cli.command {
        Command::Chimera(a) => {
            let hw = a.lattice.hardware(a.cell_size)?;
            eprintln!("{} active qubits, {} couplers", hw.num_active(), hw.num_edges());
            emit(cli, "chimera.txt", &hw.to_text())
        }
        Command::Encode(a) => encode(cli, a),
        Command::Planarity(a) => planarity(cli, a),
        Command::Gap(a) => {
            let problem = a.problem.problem()?;
            let policy = a.level.map_or(LevelPolicy::default(), LevelPolicy::Fixed);
            let profile = gap_profile(&problem, &a.schedule.schedule()?, a.points, policy)?;
            eprintln!(
                "level {}: delta_min {} at s_min {}",
                profile.level, profile.delta_min, profile.s_min
            );
            emit(cli, "gap.csv", &profile.to_csv())
        }
        Command::Evolve(a) => evolve(cli, a),
        Command::Sweep => sweep(cli),
        Command::Decode(a) => {
            let problem = a.problem.problem()?;
            let samples = SampleSet::parse(&std::fs::read_to_string(&a.samples)?)?;
            let h = histogram_suite(&samples, &Classifier::new(&problem)?, a.symmetrize)?;
            eprintln!("{} samples, decodable fraction {}", h.total_count, h.decodable_fraction);
            match &cli.out {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    std::fs::write(dir.join("hamming_physical.csv"), HistogramSuite::hamming_csv(&h.hamming_physical))?;
                    std::fs::write(dir.join("hamming_logical.csv"), HistogramSuite::hamming_csv(&h.hamming_logical))?;
                    std::fs::write(dir.join("per_position.csv"), h.per_position_csv())?;
                    std::fs::write(dir.join("decodability.csv"), h.decodability_csv())?;
                    Ok(())
                }
                None => {
                    print!("{}", h.per_position_csv());
                    Ok(())
                }
            }
        }
        Command::Kinkmodel(a) => {
            let model = KinkModel::new(a.alpha, a.temperature)?;
            let dist = kink_distribution(&model, a.n)?;
            eprintln!("no-kink probability {}", no_kink_probability(&model, a.n)?);
            let mut out = String::from("kinks,probability\n");
            for (k, p) in dist.iter().enumerate() {
                let _ = writeln!(out, "{k},{p}");
            }
            emit(cli, "kinks.csv", &out)
        }
        Command::Fit(a) => fit(cli, a),
        Command::Perturb(a) => {
            let params = PerturbParams {
                a0: a.a0,
                omega: a.omega,
                omega0: a.omega0,
                beta: a.beta,
                s: 0.0,
            };
            params.validate()?;
            if params.omega0_warning() {
                eprintln!("warning: omega0 >= omega; the expansion assumes a weak penalty-qubit field");
            }
            let model = match a.model {
                ModelArg::Logical => PerturbModel::LogicalQubit,
                ModelArg::Pairs => PerturbModel::CoupledPairs,
            };
            emit(cli, "perturb.csv", &gap_curve_csv(&gap_curve(model, &params, a.points)?))
        }
    }
}

/// Writes `content` to `name` in the output directory, or to stdout.
fn emit(cli: &Cli, name: &str, content: &str) -> Result<()> {
    match &cli.out {
        Some(dir) => write_file(dir, name, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), content)?;
    Ok(())
}

fn encode(cli: &Cli, a: &EncodeArgs) -> Result<()> {
    let hw = a.lattice.hardware(4)?;
    let (_, graph) = build_encoding(&hw)?;
    eprintln!(
        "{} logical qubits, {} logical edges",
        graph.num_logical(),
        graph.logical_edges().len()
    );
    let Some(length) = a.chain else {
        return emit(cli, "encoded.csv", &graph.to_csv());
    };
    let paths = embed_chain(&graph, length, a.count, cli.seed.unwrap_or(0))?;
    if paths.len() < a.count {
        eprintln!("only {} embeddings of length {length} exist", paths.len());
    }
    let mut out = String::from("embedding_id,logical_path\n");
    for (i, p) in paths.iter().enumerate() {
        let ids: Vec<String> = p.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "{i},{}", ids.join(";"));
    }
    match &cli.out {
        Some(dir) => {
            write_file(dir, "encoded.csv", &graph.to_csv())?;
            write_file(dir, "embeddings.csv", &out)
        }
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

fn planarity(cli: &Cli, a: &PlanarityArgs) -> Result<()> {
    let g = match &a.edges {
        Some(p) => SimpleGraph::parse(&std::fs::read_to_string(p)?)?,
        None => build_encoding(&a.lattice.hardware(4)?)?.1.to_simple_graph(),
    };
    let text = match contains_k33_subdivision(&g) {
        Some(cert) => {
            validate_k33(&g, &cert).map_err(|e| QacError::Numerical(format!("certificate failed validation: {e}")))?;
            let mut t = format!("left {:?}\nright {:?}\n", cert.left, cert.right);
            for p in &cert.paths {
                let ids: Vec<String> = p.iter().map(usize::to_string).collect();
                let _ = writeln!(t, "path {}", ids.join(" "));
            }
            eprintln!("K3,3 subdivision found and validated");
            t
        }
        None => {
            eprintln!("none found");
            String::from("none found\n")
        }
    };
    emit(cli, "k33.txt", &text)
}

fn evolve(cli: &Cli, a: &EvolveArgs) -> Result<()> {
    let problem = a.problem.problem()?;
    let schedule = a.schedule.schedule()?;
    let initial = QuantumState::driver_ground(problem.num_physical());
    let trajectory: Trajectory = if a.closed {
        let options = ClosedOptions {
            tolerance: a.tolerance.unwrap_or(1e-10),
            record: a.record.clone(),
            ..Default::default()
        };
        evolve_closed(problem.physical(), &schedule, &initial, &options)?
    } else {
        let bath = BathSpec {
            kappa: a.kappa,
            omega_c: a.omega_c,
            temperature: a.temperature,
            cutoff: match a.cutoff {
                CutoffArg::AsPrinted => CutoffMode::AsPrinted,
                CutoffArg::Symmetric => CutoffMode::Symmetric,
            },
        };
        let options = OpenOptions {
            tolerance: a.tolerance.unwrap_or(1e-6),
            lamb_shift: a.lamb_shift,
            record: a.record.clone(),
            ..Default::default()
        };
        let traj = evolve_open(problem.physical(), &schedule, &bath, &initial, &options)?;
        eprintln!(
            "trace deviation {:e}, min eigenvalue {:e}",
            traj.max_trace_deviation, traj.min_eigenvalue
        );
        traj.trajectory
    };
    let sp = success_probabilities(trajectory.final_state(), &problem)?;
    eprintln!("P_GS {} P_S {}", sp.p_gs, sp.p_s);
    let csv = trajectory_csv(&trajectory, &problem, &schedule, a.gaps)?;
    if a.shots == 0 {
        return emit(cli, "trajectory.csv", &csv);
    }
    let samples = sample_readout(trajectory.final_state(), a.shots, cli.seed.unwrap_or(0))?;
    match &cli.out {
        Some(dir) => {
            write_file(dir, "trajectory.csv", &csv)?;
            write_file(dir, "samples.csv", &samples.to_csv())
        }
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn sweep(cli: &Cli) -> Result<()> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| QacError::Configuration("`sweep` needs --config".into()))?;
    let mut loaded = LoadedConfig::from_file(path)?;
    if let Some(seed) = cli.seed {
        loaded.config.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        loaded.config.jobs = jobs;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| loaded.config.out.clone())
        .ok_or_else(|| QacError::Configuration("no output directory: pass --out or set `out`".into()))?;
    let result = run_sweep(&loaded)?;
    let manifest = emit_report(&result, &loaded, &out)?;
    eprintln!(
        "{} points ({} failed), {} files in {}",
        manifest.points,
        manifest.failures,
        manifest.outputs.len(),
        out.display()
    );
    for ((strategy, alpha, n), (beta, agg)) in result.beta_opt() {
        eprintln!(
            "{strategy} alpha {} n {n}: beta_opt {beta} success {}",
            f64::from_bits(alpha),
            agg.mean
        );
    }
    Ok(())
}

fn fit(cli: &Cli, a: &FitArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.data)?;
    let mut data = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(|c: char| c.is_ascii_alphabetic()) {
            continue;
        }
        let bad = || QacError::Format {
            line: i + 1,
            message: "expected `n,probability`".into(),
        };
        let (n, p) = line.split_once(',').ok_or_else(bad)?;
        data.push((
            n.trim().parse::<f64>().map_err(|_| bad())?,
            p.trim().parse::<f64>().map_err(|_| bad())?,
        ));
    }
    let mut out = String::from("form,p,residual,degenerate\n");
    for (name, r) in [("lorentzian", lorentzian_fit(&data)?), ("exponential", exponential_fit(&data)?)] {
        let _ = writeln!(out, "{name},{},{},{}", r.p, r.residual, r.degenerate);
    }
    emit(cli, "fit.csv", &out)
}
