//! Annealing schedules `A(s)`, `B(s)` sampled on `s ∈ [0, 1]`.
//!
//! Energies are angular frequencies in GHz (rad/ns, ħ = 1); the anneal time
//! is given in microseconds.

use crate::error::{QacError, Result};

/// Relative tolerance for the endpoint conditions `A(1) = B(0) = 0`.
pub const ENDPOINT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealSchedule {
    t_f_us: f64,
    s: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl AnnealSchedule {
    /// Builds a piecewise-linear schedule from samples `(s, A, B)`.
    pub fn from_samples(t_f_us: f64, samples: &[(f64, f64, f64)]) -> Result<Self> {
        if !(t_f_us > 0.0 && t_f_us.is_finite()) {
            return Err(QacError::input(format!("anneal time {t_f_us} µs must be positive")));
        }
        if samples.len() < 2 {
            return Err(QacError::format(0, "schedule needs at least two samples"));
        }
        for (k, w) in samples.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                return Err(QacError::format(k + 2, "s values must be strictly increasing"));
            }
        }
        let first = samples[0];
        let last = samples[samples.len() - 1];
        if first.0 != 0.0 || last.0 != 1.0 {
            return Err(QacError::format(0, "schedule must start at s = 0 and end at s = 1"));
        }
        if samples.iter().any(|&(s, a, b)| !(s.is_finite() && a.is_finite() && b.is_finite())) {
            return Err(QacError::format(0, "non-finite schedule value"));
        }
        let scale = samples
            .iter()
            .map(|&(_, a, b)| a.abs().max(b.abs()))
            .fold(0.0, f64::max);
        if last.1.abs() > ENDPOINT_TOLERANCE * scale {
            return Err(QacError::format(samples.len(), format!("A(1) = {} is not zero", last.1)));
        }
        if first.2.abs() > ENDPOINT_TOLERANCE * scale {
            return Err(QacError::format(1, format!("B(0) = {} is not zero", first.2)));
        }
        Ok(AnnealSchedule {
            t_f_us,
            s: samples.iter().map(|x| x.0).collect(),
            a: samples.iter().map(|x| x.1).collect(),
            b: samples.iter().map(|x| x.2).collect(),
        })
    }

    /// Parses CSV rows `s,A_GHz,B_GHz`; a non-numeric first row is taken as a
    /// header and `#` starts a comment.
    pub fn from_table(text: &str, t_f_us: f64) -> Result<Self> {
        let mut samples = Vec::new();
        let mut first_row = true;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
            match parsed {
                Some(v) if v.len() == 3 => samples.push((v[0], v[1], v[2])),
                None if first_row => {}
                _ => {
                    return Err(QacError::format(lineno + 1, format!("expected `s,A,B`, got `{line}`")));
                }
            }
            first_row = false;
        }
        if samples.is_empty() {
            return Err(QacError::format(0, "schedule table is empty"));
        }
        AnnealSchedule::from_samples(t_f_us, &samples)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,A_GHz,B_GHz\n");
        for k in 0..self.s.len() {
            out.push_str(&format!("{},{},{}\n", self.s[k], self.a[k], self.b[k]));
        }
        out
    }

    pub fn t_f_us(&self) -> f64 {
        self.t_f_us
    }

    /// Anneal time in nanoseconds, the internal time unit.
    pub fn t_f_ns(&self) -> f64 {
        self.t_f_us * 1e3
    }

    pub fn with_t_f(&self, t_f_us: f64) -> Result<Self> {
        let samples: Vec<_> = (0..self.s.len()).map(|k| (self.s[k], self.a[k], self.b[k])).collect();
        AnnealSchedule::from_samples(t_f_us, &samples)
    }

    pub fn a(&self, s: f64) -> f64 {
        self.interpolate(&self.a, s)
    }

    pub fn b(&self, s: f64) -> f64 {
        self.interpolate(&self.b, s)
    }

    /// Sample positions; the coefficients are linear between them.
    pub fn knots(&self) -> &[f64] {
        &self.s
    }

    fn interpolate(&self, values: &[f64], s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        let k = self.s.partition_point(|&x| x <= s).clamp(1, self.s.len() - 1);
        let (s0, s1) = (self.s[k - 1], self.s[k]);
        let t = (s - s0) / (s1 - s0);
        values[k - 1] + t * (values[k] - values[k - 1])
    }
}

/// `A(s) = 2·A0·(1 − s)`, `B(s) = 2·A0·s`.
pub fn schedule_linear(a0: f64, t_f_us: f64) -> Result<AnnealSchedule> {
    if !(a0 > 0.0 && a0.is_finite()) {
        return Err(QacError::input(format!("A0 = {a0} must be positive")));
    }
    AnnealSchedule::from_samples(t_f_us, &[(0.0, 2.0 * a0, 0.0), (1.0, 0.0, 2.0 * a0)])
}

pub fn schedule_from_table(text: &str, t_f_us: f64) -> Result<AnnealSchedule> {
    AnnealSchedule::from_table(text, t_f_us)
}
