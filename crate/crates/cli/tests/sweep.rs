use std::path::{Path, PathBuf};
use std::process::Command;

use qac_cli::{emit_report, run_sweep, LoadedConfig, SweepConfig};
use qac_core::problem::Strategy;
use qac_core::QacError;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// A fast closed-system anneal: linear schedule over one nanosecond.
fn quick(strategies: &str, beta: &str, n: &str) -> String {
    format!(
        r#"
seed = 11

[grid]
strategies = [{strategies}]
alpha = [0.3]
beta = [{beta}]
n = [{n}]

[schedule]
kind = "linear"
a0 = 1.0
t_f_us = 0.001

[run]
mode = "closed"
tolerance = 1e-8
gap_points = 21
"#
    )
}

fn loaded(text: &str) -> LoadedConfig {
    LoadedConfig {
        config: SweepConfig::parse(text).unwrap(),
        base_dir: configs_dir(),
    }
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn single_point_sweep() {
    let cfg = loaded(&quick("\"QAC\"", "0.2", "2"));
    let result = run_sweep(&cfg).unwrap();
    assert_eq!(result.points.len(), 1);
    let o = result.points[0].outcome.as_ref().unwrap();
    assert!(o.p_s >= o.p_gs, "{} < {}", o.p_s, o.p_gs);
    assert!(o.p_gs > 0.0 && o.p_s < 1.0, "anneal should be neither trivial nor hopeless");
    let dir = tempfile::tempdir().unwrap();
    let manifest = emit_report(&result, &cfg, dir.path()).unwrap();
    assert!(dir.path().join("manifest.toml").exists());
    let results = read(dir.path(), "results.csv");
    assert_eq!(results.lines().count(), 2);
    assert!(results.lines().nth(1).unwrap().starts_with("QAC,0.3,0.2,2,0,"));
    assert!(manifest.outputs.iter().any(|e| e.path == "results.csv" && e.sha256.is_some()));
    assert!(manifest.outputs.iter().any(|e| e.path == "gaps/QAC_a0.3_b0.2_n2.csv"));
}

#[test]
fn density_rows_and_beta_opt() {
    let cfg = loaded(&quick("\"U\", \"EP\", \"QAC\"", "0.1, 0.3, 0.5", "2"));
    let result = run_sweep(&cfg).unwrap();
    // U runs at β = 0 only
    assert_eq!(result.points.len(), 1 + 3 + 3);
    let dir = tempfile::tempdir().unwrap();
    emit_report(&result, &cfg, dir.path()).unwrap();
    let density = read(dir.path(), "density.csv");
    let rows: Vec<&str> = density.lines().skip(1).collect();
    assert_eq!(rows.len(), 7);
    let best = result.beta_opt();
    for row in &rows {
        let f: Vec<&str> = row.split(',').collect();
        let strategy: Strategy = f[0].parse().unwrap();
        let beta_opt: f64 = f[7].parse().unwrap();
        assert_eq!(beta_opt, best[&(strategy, 0.3f64.to_bits(), 2)].0);
    }
    // EP and QAC share an anneal, so P_GS agrees point by point
    for r in result.points.iter().filter(|r| r.point.strategy == Strategy::Qac) {
        let twin = result
            .points
            .iter()
            .find(|e| e.point.strategy == Strategy::EnergyPenalty && e.point.beta == r.point.beta)
            .unwrap();
        assert_eq!(r.outcome.as_ref().unwrap().p_gs, twin.outcome.as_ref().unwrap().p_gs);
    }
    assert_eq!(read(dir.path(), "success_vs_n.csv").lines().count(), 4);
}

#[test]
fn rerun_is_byte_identical() {
    let mut text = quick("\"C\", \"QAC\"", "0.2", "2");
    text = text.replace("gap_points = 21", "gap_points = 0\nshots = 500");
    text = text.replace("[grid]", "[grid]\nembeddings = 2");
    let cfg = loaded(&text);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = emit_report(&run_sweep(&cfg).unwrap(), &cfg, a.path()).unwrap();
    let mut cfg_jobs = cfg.clone();
    cfg_jobs.config.jobs = 2;
    let mb = emit_report(&run_sweep(&cfg_jobs).unwrap(), &cfg_jobs, b.path()).unwrap();
    assert_eq!(ma, mb);
    for e in ma.outputs.iter().filter(|e| e.sha256.is_some()) {
        assert_eq!(read(a.path(), &e.path), read(b.path(), &e.path), "{}", e.path);
    }
    assert!(ma.outputs.iter().any(|e| e.path.starts_with("histograms/")));
    // two embeddings drew different samples
    let samples = read(a.path(), "samples/QAC_a0.3_b0.2_n2.csv");
    assert!(samples.lines().any(|l| l.starts_with("0,")) && samples.lines().any(|l| l.starts_with("1,")));
    let mut other = cfg.clone();
    other.config.seed += 1;
    let c = tempfile::tempdir().unwrap();
    emit_report(&run_sweep(&other).unwrap(), &other, c.path()).unwrap();
    assert_ne!(read(a.path(), "results.csv"), read(c.path(), "results.csv"));
}

#[test]
fn empty_alpha_grid_is_rejected() {
    let text = quick("\"QAC\"", "0.2", "2").replace("alpha = [0.3]", "alpha = []");
    let err = run_sweep(&loaded(&text)).unwrap_err();
    assert!(matches!(err, QacError::Configuration(_)));
    assert!(err.to_string().contains("grid.alpha"), "{err}");
}

#[test]
fn failures_are_recorded_per_point() {
    // the closed integrator gives up on a one-step budget
    let text = quick("\"U\"", "0.0", "2, 3").replace("tolerance = 1e-8", "tolerance = 1e-300");
    let result = run_sweep(&loaded(&text)).unwrap();
    assert_eq!(result.points.len(), 2);
    assert_eq!(result.failures(), 2);
    let dir = tempfile::tempdir().unwrap();
    let manifest = emit_report(&result, &loaded(&text), dir.path()).unwrap();
    assert_eq!(manifest.failures, 2);
    assert!(read(dir.path(), "results.csv").contains("error: numerical failure"));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let cfg = loaded(&quick("\"U\"", "0.0", "2"));
    let result = run_sweep(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    assert!(matches!(emit_report(&result, &cfg, &blocker.join("out")), Err(QacError::Io(_))));
}

fn qac(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_qac")).args(args).output().unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, quick("\"QAC\"", "0.2", "2").replace("alpha = [0.3]", "alpha = []")).unwrap();
    let out = dir.path().join("out");
    let run = |cfg: &Path| qac(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(run(&bad).status.code(), Some(2));
    let big = dir.path().join("big.toml");
    let text = quick("\"QAC\"", "0.2", "3").replace("mode = \"closed\"", "mode = \"open\"");
    std::fs::write(&big, text).unwrap();
    assert_eq!(run(&big).status.code(), Some(3));
    let perturb = qac(&["perturb", "--model", "pairs", "--omega", "0", "--points", "5"]);
    assert!(perturb.status.success());
    assert!(String::from_utf8_lossy(&perturb.stdout).lines().count() > 1);
    let fit = dir.path().join("out_of_domain.csv");
    std::fs::write(&fit, "n,p\n2,1.5\n3,1\n4,1\n").unwrap();
    assert_eq!(qac(&["fit", "--data", fit.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(qac(&["kinkmodel", "--alpha", "0.3", "--temperature", "1", "--n", "4"]).status.code(), Some(0));
    assert_eq!(qac(&["gap", "--n", "2", "--strategy", "U", "--points", "11"]).status.code(), Some(0));
    let tight = qac(&[
        "evolve", "--closed", "--strategy", "U", "--t-f", "0.001", "--tolerance", "1e-300",
    ]);
    assert_eq!(tight.status.code(), Some(4), "{}", String::from_utf8_lossy(&tight.stderr));
}

#[test]
fn graph_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let chimera = qac(&["chimera", "--rows", "2", "--cols", "2", "--defects", "3", "--out", out]);
    assert!(chimera.status.success());
    let graph = dir.path().join("chimera.txt");
    assert!(graph.exists());
    let enc = qac(&["encode", "--graph", graph.to_str().unwrap(), "--chain", "3", "--count", "2", "--out", out]);
    assert!(enc.status.success(), "{}", String::from_utf8_lossy(&enc.stderr));
    assert!(read(dir.path(), "embeddings.csv").starts_with("embedding_id,logical_path\n"));
    let planar = qac(&["planarity", "--rows", "4", "--cols", "4"]);
    assert!(planar.status.success());
    assert!(String::from_utf8_lossy(&planar.stdout).starts_with("left "));
    let path = dir.path().join("square.txt");
    std::fs::write(&path, "v 4\ne 0 1\ne 1 2\ne 2 3\ne 3 0\n").unwrap();
    let square = qac(&["planarity", "--edges", path.to_str().unwrap()]);
    assert_eq!(String::from_utf8_lossy(&square.stdout), "none found\n");
    assert_eq!(qac(&["chimera", "--config", "x.toml"]).status.code(), Some(2));
}

#[test]
fn evolve_and_decode_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let evolve = qac(&[
        "evolve", "--closed", "--strategy", "QAC", "--beta", "0.2", "--t-f", "0.001", "--tolerance", "1e-8",
        "--record", "0.5", "--shots", "200", "--seed", "3", "--out", out,
    ]);
    assert!(evolve.status.success(), "{}", String::from_utf8_lossy(&evolve.stderr));
    let traj = read(dir.path(), "trajectory.csv");
    assert!(traj.starts_with("s,trace,purity,P_GS,P_S,gap_1"));
    assert_eq!(traj.lines().count(), 3);
    let samples = dir.path().join("samples.csv");
    let decoded = dir.path().join("decoded");
    let decode = qac(&[
        "decode", "--strategy", "QAC", "--beta", "0.2", "--samples", samples.to_str().unwrap(), "--out",
        decoded.to_str().unwrap(),
    ]);
    assert!(decode.status.success(), "{}", String::from_utf8_lossy(&decode.stderr));
    for f in ["hamming_physical.csv", "hamming_logical.csv", "per_position.csv", "decodability.csv"] {
        assert!(decoded.join(f).exists(), "{f}");
    }
}

/// The shipped desk-scale suite: decoding lowers the optimal penalty.
#[test]
fn shipped_suite_beta_opt_ep_not_below_qac() {
    let cfg = LoadedConfig::from_file(&configs_dir().join("desk_suite.toml")).unwrap();
    let result = run_sweep(&cfg).unwrap();
    assert_eq!(result.failures(), 0);
    let best = result.beta_opt();
    for &alpha in &cfg.config.grid.alpha {
        for &n in &cfg.config.grid.n {
            let ep = best[&(Strategy::EnergyPenalty, alpha.to_bits(), n)].0;
            let qac = best[&(Strategy::Qac, alpha.to_bits(), n)].0;
            println!("alpha {alpha} n {n}: beta_opt EP {ep}, QAC {qac}");
            assert!(ep >= qac, "alpha {alpha} n {n}: EP {ep} < QAC {qac}");
        }
    }
    for r in &result.points {
        let o = r.outcome.as_ref().unwrap();
        assert!(o.trace_deviation.unwrap() < 1e-8 && o.min_eigenvalue.unwrap() > -1e-6);
    }
}
