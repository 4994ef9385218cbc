//! Sweep configuration files.
//!
//! A sweep is described by a TOML file:
//!
//! ```toml
//! seed = 7                 # rng seed for readout sampling (default 0)
//! jobs = 1                 # worker threads (default 1)
//! out = "runs/scan"        # output directory, relative to the working directory; --out overrides
//!
//! [grid]
//! strategies = ["EP", "QAC"]   # any of U, C, EP, QAC
//! alpha = [0.3]                # logical coupling scale, each in (0, 1]
//! beta = [0.1, 0.2, 0.3]       # penalty scale, each in [0, 1]; U and C use 0
//! n = [2]                      # logical chain lengths, each >= 2
//! embeddings = 1               # repetitions per point (default 1)
//!
//! [schedule]
//! kind = "table"               # "table" (CSV of s,A_GHz,B_GHz) or "linear"
//! path = "schedules/dw2_like.csv"  # table only, relative to the config file
//! # a0 = 1.0                   # linear only: A = 2 a0 (1 - s), B = 2 a0 s, rad/ns
//! t_f_us = 20.0                # anneal time in microseconds
//!
//! [bath]                       # open mode only
//! kappa = 3.18e-4              # dimensionless coupling (default 0)
//! temperature = 2.2            # rad/ns (default 2.2)
//! omega_c = 25.132741228718345 # rad/ns (default 8 pi)
//! cutoff = "as_printed"        # or "symmetric"
//! lamb_shift = false
//!
//! [run]
//! mode = "open"                # "open" (Lindblad) or "closed" (Schrodinger)
//! tolerance = 1e-4             # per-step error tolerance (default 1e-6 open, 1e-10 closed)
//! shots = 0                    # readout samples per point; 0 uses exact populations
//! gap_points = 101             # s-grid for the gap profile; 0 skips it
//! ```

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qac_core::dynamics::{CutoffMode, DEFAULT_HAMILTONIAN_CAP, DEFAULT_OPEN_CAP};
use qac_core::problem::{schedule_from_table, schedule_linear, AnnealSchedule, Strategy};
use qac_core::{QacError, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub jobs: usize,
    /// Output directory, relative to the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub grid: Grid,
    pub schedule: ScheduleSource,
    #[serde(default)]
    pub bath: BathConfig,
    #[serde(default)]
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub strategies: Vec<String>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub n: Vec<usize>,
    #[serde(default = "one")]
    pub embeddings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSource {
    Table { path: PathBuf, t_f_us: f64 },
    Linear { a0: f64, t_f_us: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cutoff {
    AsPrinted,
    Symmetric,
}

impl From<Cutoff> for CutoffMode {
    fn from(c: Cutoff) -> Self {
        match c {
            Cutoff::AsPrinted => CutoffMode::AsPrinted,
            Cutoff::Symmetric => CutoffMode::Symmetric,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    #[serde(default)]
    pub kappa: f64,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_omega_c")]
    pub omega_c: f64,
    #[serde(default = "default_cutoff")]
    pub cutoff: Cutoff,
    #[serde(default)]
    pub lamb_shift: bool,
}

impl Default for BathConfig {
    fn default() -> Self {
        BathConfig {
            kappa: 0.0,
            temperature: default_temperature(),
            omega_c: default_omega_c(),
            cutoff: default_cutoff(),
            lamb_shift: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub shots: u64,
    #[serde(default = "default_gap_points")]
    pub gap_points: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: default_mode(),
            tolerance: None,
            shots: 0,
            gap_points: default_gap_points(),
        }
    }
}

impl RunConfig {
    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(match self.mode {
            Mode::Open => 1e-6,
            Mode::Closed => 1e-10,
        })
    }
}

fn one() -> usize {
    1
}

fn default_temperature() -> f64 {
    2.2
}

fn default_omega_c() -> f64 {
    8.0 * PI
}

fn default_cutoff() -> Cutoff {
    Cutoff::AsPrinted
}

fn default_mode() -> Mode {
    Mode::Open
}

fn default_gap_points() -> usize {
    101
}

/// Physical qubits used by `strategy` for a chain of `n` logical qubits.
pub fn physical_qubits(strategy: Strategy, n: usize) -> usize {
    match strategy {
        Strategy::Unencoded => n,
        Strategy::Classical => 3 * n,
        Strategy::EnergyPenalty | Strategy::Qac => 4 * n,
    }
}

/// A parsed configuration together with the directory relative paths are
/// resolved against.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: SweepConfig,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(LoadedConfig {
            config: SweepConfig::parse(&text)?,
            base_dir,
        })
    }

    pub fn schedule_text(&self) -> Result<Option<String>> {
        match &self.config.schedule {
            ScheduleSource::Table { path, .. } => Ok(Some(std::fs::read_to_string(self.base_dir.join(path))?)),
            ScheduleSource::Linear { .. } => Ok(None),
        }
    }

    pub fn schedule(&self) -> Result<AnnealSchedule> {
        match (&self.config.schedule, self.schedule_text()?) {
            (ScheduleSource::Table { t_f_us, .. }, Some(text)) => schedule_from_table(&text, *t_f_us),
            (ScheduleSource::Linear { a0, t_f_us }, _) => schedule_linear(*a0, *t_f_us),
            _ => unreachable!("table schedules always have text"),
        }
    }

    /// SHA-256 over the canonical configuration and the schedule table.
    ///
    /// The output directory and thread count do not change results and are
    /// left out.
    pub fn hash(&self) -> Result<String> {
        let mut canonical = self.config.clone();
        canonical.out = None;
        canonical.jobs = 1;
        let text = toml::to_string(&canonical).map_err(|e| QacError::Configuration(e.to_string()))?;
        let mut h = Sha256::new();
        h.update(text.as_bytes());
        if let Some(table) = self.schedule_text()? {
            h.update(b"\0");
            h.update(table.as_bytes());
        }
        Ok(hex::encode(h.finalize()))
    }
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| QacError::Configuration(e.to_string()))
    }

    pub fn strategies(&self) -> Result<Vec<Strategy>> {
        self.grid.strategies.iter().map(|s| s.parse()).collect()
    }

    /// Checks every field, reporting all violations at once.
    ///
    /// Size caps are checked last and reported as resource errors.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let g = &self.grid;
        if g.strategies.is_empty() {
            bad.push("grid.strategies: empty".to_string());
        }
        for s in &g.strategies {
            if s.parse::<Strategy>().is_err() {
                bad.push(format!("grid.strategies: unknown strategy `{s}`"));
            }
        }
        if g.alpha.is_empty() {
            bad.push("grid.alpha: empty".to_string());
        }
        if let Some(a) = g.alpha.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
            bad.push(format!("grid.alpha: {a} outside (0, 1]"));
        }
        if g.beta.is_empty() {
            bad.push("grid.beta: empty".to_string());
        }
        if let Some(b) = g.beta.iter().find(|b| !(0.0..=1.0).contains(*b)) {
            bad.push(format!("grid.beta: {b} outside [0, 1]"));
        }
        if g.n.is_empty() {
            bad.push("grid.n: empty".to_string());
        }
        if let Some(n) = g.n.iter().find(|n| **n < 2) {
            bad.push(format!("grid.n: chain length {n} is below 2"));
        }
        if g.embeddings == 0 {
            bad.push("grid.embeddings: must be at least 1".to_string());
        }
        if self.jobs == 0 {
            bad.push("jobs: must be at least 1".to_string());
        }
        let (a0, t_f) = match &self.schedule {
            ScheduleSource::Table { t_f_us, .. } => (None, *t_f_us),
            ScheduleSource::Linear { a0, t_f_us } => (Some(*a0), *t_f_us),
        };
        if !(t_f > 0.0 && t_f.is_finite()) {
            bad.push(format!("schedule.t_f_us: {t_f} must be positive"));
        }
        if let Some(a0) = a0.filter(|a| !(*a > 0.0 && a.is_finite())) {
            bad.push(format!("schedule.a0: {a0} must be positive"));
        }
        let b = &self.bath;
        if !(b.kappa >= 0.0 && b.kappa.is_finite()) {
            bad.push(format!("bath.kappa: {} must be nonnegative", b.kappa));
        }
        if !(b.temperature > 0.0 && b.temperature.is_finite()) {
            bad.push(format!("bath.temperature: {} must be positive", b.temperature));
        }
        if !(b.omega_c > 0.0 && b.omega_c.is_finite()) {
            bad.push(format!("bath.omega_c: {} must be positive", b.omega_c));
        }
        let r = &self.run;
        if let Some(t) = r.tolerance.filter(|t| !(*t > 0.0 && t.is_finite())) {
            bad.push(format!("run.tolerance: {t} must be positive"));
        }
        if r.gap_points == 1 {
            bad.push("run.gap_points: must be 0 or at least 2".to_string());
        }
        if !bad.is_empty() {
            let mut msg = String::from("invalid sweep configuration:");
            for b in &bad {
                let _ = write!(msg, "\n  {b}");
            }
            return Err(QacError::Configuration(msg));
        }
        let cap = match r.mode {
            Mode::Open => DEFAULT_OPEN_CAP,
            Mode::Closed => DEFAULT_HAMILTONIAN_CAP,
        };
        let largest = self
            .strategies()?
            .into_iter()
            .flat_map(|s| g.n.iter().map(move |&n| physical_qubits(s, n)))
            .max()
            .unwrap_or(0);
        if largest > cap {
            return Err(QacError::Resource {
                what: "physical qubits in the sweep",
                requested: largest,
                cap,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[grid]
strategies = ["QAC"]
alpha = [0.3]
beta = [0.2]
n = [2]

[schedule]
kind = "linear"
a0 = 1.0
t_f_us = 1.0
"#;

    #[test]
    fn defaults() {
        let c = SweepConfig::parse(MINIMAL).unwrap();
        assert_eq!((c.seed, c.jobs, c.grid.embeddings), (0, 1, 1));
        assert_eq!(c.run.mode, Mode::Open);
        assert_eq!(c.run.tolerance(), 1e-6);
        assert_eq!(c.bath.temperature, 2.2);
        c.validate().unwrap();
    }

    #[test]
    fn lists_every_bad_field() {
        let text = MINIMAL.replace("alpha = [0.3]", "alpha = []").replace("n = [2]", "n = [1]");
        let err = SweepConfig::parse(&text).unwrap().validate().unwrap_err().to_string();
        assert!(err.contains("grid.alpha") && err.contains("grid.n"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(SweepConfig::parse(&format!("{MINIMAL}\n[run]\nshotz = 3\n")).is_err());
    }

    #[test]
    fn cap_is_a_resource_error() {
        let c = SweepConfig::parse(&MINIMAL.replace("n = [2]", "n = [3]")).unwrap();
        assert!(matches!(c.validate(), Err(QacError::Resource { requested: 12, cap: 8, .. })));
    }

    #[test]
    fn hash_ignores_output_and_jobs() {
        let a = LoadedConfig {
            config: SweepConfig::parse(MINIMAL).unwrap(),
            base_dir: PathBuf::new(),
        };
        let mut b = a.clone();
        b.config.jobs = 4;
        b.config.out = Some("elsewhere".into());
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.config.seed = 1;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
    }
}
