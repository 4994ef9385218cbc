//! CSV outputs and the manifest of a finished sweep.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use qac_core::decode::{histogram_suite, Classifier, HistogramSuite, SampleSet};
use qac_core::problem::{encode_problem, make_af_chain};
use qac_core::{QacError, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::LoadedConfig;
use crate::sweep::{Setting, SweepResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    /// Absent for files whose content varies between runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub config_sha256: String,
    pub seed: u64,
    pub points: usize,
    pub failures: usize,
    pub outputs: Vec<ManifestEntry>,
}

struct Writer<'a> {
    root: &'a Path,
    entries: Vec<ManifestEntry>,
}

impl Writer<'_> {
    fn write(&mut self, rel: &str, content: &str, hashed: bool) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, content)?;
        self.entries.push(ManifestEntry {
            path: rel.to_string(),
            sha256: hashed.then(|| hex::encode(Sha256::digest(content.as_bytes()))),
        });
        Ok(())
    }
}

/// Quotes a CSV field when it contains a delimiter, quote or newline.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per grid point. Runtimes go to `timings.csv` so that this file is
/// reproducible byte for byte.
pub fn results_csv(result: &SweepResult) -> String {
    let mut out = String::from(
        "strategy,alpha,beta,n,embedding_id,p_gs,p_s,success,delta_min,s_min,trace_deviation,min_eigenvalue,status\n",
    );
    for r in &result.points {
        let p = &r.point;
        let _ = write!(out, "{},{},{},{},{},", p.strategy, p.alpha, p.beta, p.n, p.embedding_id);
        match &r.outcome {
            Ok(o) => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},ok",
                    o.p_gs,
                    o.p_s,
                    o.success,
                    opt(o.gap.as_ref().map(|g| g.delta_min)),
                    opt(o.gap.as_ref().map(|g| g.s_min)),
                    opt(o.trace_deviation),
                    opt(o.min_eigenvalue),
                );
            }
            Err(e) => {
                let _ = writeln!(out, ",,,,,,,{}", csv_field(&format!("error: {e}")));
            }
        }
    }
    out
}

pub fn timings_csv(result: &SweepResult) -> String {
    let mut out = String::from("strategy,alpha,beta,n,embedding_id,runtime_s\n");
    for r in &result.points {
        let p = &r.point;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.strategy, p.alpha, p.beta, p.n, p.embedding_id, r.runtime
        );
    }
    out
}

/// Success at the optimal β against chain length, per strategy and α.
pub fn success_vs_n_csv(result: &SweepResult) -> String {
    let mut out = String::from("strategy,alpha,n,beta_opt,mean_success,standard_error,embeddings\n");
    for ((strategy, alpha, n), (beta, a)) in result.beta_opt() {
        let _ = writeln!(
            out,
            "{strategy},{},{n},{beta},{},{},{}",
            f64::from_bits(alpha),
            a.mean,
            a.standard_error,
            a.count
        );
    }
    out
}

/// Mean success over the (β, N) grid, one row per cell, with the optimal β
/// of the cell's (strategy, α, N).
pub fn density_csv(result: &SweepResult) -> String {
    let best = result.beta_opt();
    let mut out = String::from("strategy,alpha,beta,n,mean_success,standard_error,embeddings,beta_opt\n");
    for (k, a) in result.aggregates() {
        let beta_opt = best[&(k.strategy, k.alpha().to_bits(), k.n)].0;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{beta_opt}",
            k.strategy,
            k.alpha(),
            k.beta(),
            k.n,
            a.mean,
            a.standard_error,
            a.count
        );
    }
    out
}

/// Readouts of all embeddings of each setting, merged.
fn merged_samples(result: &SweepResult) -> Result<BTreeMap<Setting, SampleSet>> {
    let mut merged: BTreeMap<Setting, SampleSet> = BTreeMap::new();
    for r in &result.points {
        let Ok(Some(samples)) = r.outcome.as_ref().map(|o| o.samples.as_ref()) else {
            continue;
        };
        let set = merged
            .entry(r.point.setting())
            .or_insert_with(|| SampleSet::new(samples.num_qubits()));
        for rec in samples.records() {
            set.push(rec.clone())?;
        }
    }
    Ok(merged)
}

fn histograms(setting: &Setting, samples: &SampleSet) -> Result<HistogramSuite> {
    let encoding = setting.strategy.compact_encoding(setting.n)?;
    let problem = encode_problem(
        &make_af_chain(setting.n)?,
        setting.strategy,
        setting.alpha(),
        setting.beta(),
        encoding.as_ref(),
    )?;
    histogram_suite(samples, &Classifier::new(&problem)?, true)
}

/// Writes every output under `dir` and returns the manifest.
pub fn emit_report(result: &SweepResult, loaded: &LoadedConfig, dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| QacError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))?;
    let mut w = Writer {
        root: dir,
        entries: Vec::new(),
    };
    w.write("results.csv", &results_csv(result), true)?;
    w.write("timings.csv", &timings_csv(result), false)?;
    w.write("success_vs_n.csv", &success_vs_n_csv(result), true)?;
    w.write("density.csv", &density_csv(result), true)?;
    for r in result.points.iter().filter(|r| r.point.embedding_id == 0) {
        if let Ok(Some(gap)) = r.outcome.as_ref().map(|o| o.gap.as_ref()) {
            w.write(&format!("gaps/{}.csv", r.point.setting().stem()), &gap.to_csv(), true)?;
        }
    }
    for (setting, samples) in merged_samples(result)? {
        let stem = setting.stem();
        w.write(&format!("samples/{stem}.csv"), &samples.to_csv(), true)?;
        let h = histograms(&setting, &samples)?;
        w.write(
            &format!("histograms/{stem}_hamming_physical.csv"),
            &HistogramSuite::hamming_csv(&h.hamming_physical),
            true,
        )?;
        w.write(
            &format!("histograms/{stem}_hamming_logical.csv"),
            &HistogramSuite::hamming_csv(&h.hamming_logical),
            true,
        )?;
        w.write(&format!("histograms/{stem}_per_position.csv"), &h.per_position_csv(), true)?;
        w.write(&format!("histograms/{stem}_decodability.csv"), &h.decodability_csv(), true)?;
    }
    let manifest = Manifest {
        config_sha256: loaded.hash()?,
        seed: loaded.config.seed,
        points: result.points.len(),
        failures: result.failures(),
        outputs: w.entries,
    };
    let text = toml::to_string(&manifest).map_err(|e| QacError::Configuration(e.to_string()))?;
    fs::write(dir.join("manifest.toml"), text)?;
    Ok(manifest)
}
