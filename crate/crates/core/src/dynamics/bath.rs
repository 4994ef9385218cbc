//! Ohmic dephasing baths, one per qubit, coupled through σᶻ.

use std::f64::consts::PI;

use crate::error::{QacError, Result};

/// Form of the exponential UV cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CutoffMode {
    /// `e^{−ω/ω_c}` for both signs of ω.
    #[default]
    AsPrinted,
    /// `e^{−|ω|/ω_c}`, which makes `γ(−ω)/γ(ω) = e^{−ω/T}` exactly.
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    /// Dimensionless system-bath coupling κ.
    pub kappa: f64,
    /// Cutoff frequency in rad/ns.
    pub omega_c: f64,
    /// Temperature in rad/ns (k_B T / ħ).
    pub temperature: f64,
    pub cutoff: CutoffMode,
}

impl Default for BathSpec {
    fn default() -> Self {
        BathSpec {
            kappa: 0.0,
            omega_c: 8.0 * PI,
            temperature: 2.2,
            cutoff: CutoffMode::AsPrinted,
        }
    }
}

impl BathSpec {
    pub fn with_kappa(kappa: f64) -> Self {
        BathSpec { kappa, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(QacError::input(format!("kappa = {} must be nonnegative", self.kappa)));
        }
        if !(self.omega_c > 0.0 && self.omega_c.is_finite()) {
            return Err(QacError::input(format!("omega_c = {} must be positive", self.omega_c)));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(QacError::input(format!("temperature = {} must be positive", self.temperature)));
        }
        Ok(())
    }

    fn cutoff_factor(&self, omega: f64) -> f64 {
        match self.cutoff {
            CutoffMode::AsPrinted => (-omega / self.omega_c).exp(),
            CutoffMode::Symmetric => (-omega.abs() / self.omega_c).exp(),
        }
    }
}

/// `γ(ω) = 2πκ ω e^{−ω/ω_c} / (1 − e^{−ω/T})`, with `γ(0) = 2πκT`.
pub fn bath_rate(omega: f64, bath: &BathSpec) -> f64 {
    let t = bath.temperature;
    // ω / (1 − e^{−ω/T}) = −T·x / expm1(−x), x = ω/T
    let x = omega / t;
    let thermal = if x == 0.0 { t } else { -t * x / (-x).exp_m1() };
    2.0 * PI * bath.kappa * thermal * bath.cutoff_factor(omega)
}

/// Principal-value Lamb-shift spectrum
/// `S(ω) = (1/2π) P∫_{−Λ}^{Λ} γ(ω′)/(ω − ω′) dω′`, tabulated on a uniform grid
/// and linearly interpolated.
#[derive(Debug, Clone)]
pub struct LambShiftTable {
    omega_max: f64,
    step: f64,
    values: Vec<f64>,
}

/// Integration window in units of ω_c.
pub const LAMB_SHIFT_CUTOFF: f64 = 10.0;

impl LambShiftTable {
    /// Tabulates `S` on `[−omega_max, omega_max]` with `points` samples.
    pub fn new(bath: &BathSpec, omega_max: f64, points: usize) -> Self {
        let points = points.max(3) | 1;
        let step = 2.0 * omega_max / (points - 1) as f64;
        let values = (0..points)
            .map(|k| principal_value_shift(-omega_max + k as f64 * step, bath))
            .collect();
        LambShiftTable { omega_max, step, values }
    }

    pub fn eval(&self, omega: f64) -> f64 {
        let x = ((omega + self.omega_max) / self.step).clamp(0.0, (self.values.len() - 1) as f64);
        let k = (x.floor() as usize).min(self.values.len() - 2);
        let t = x - k as f64;
        self.values[k] * (1.0 - t) + self.values[k + 1] * t
    }
}

/// Direct evaluation of `S(ω)`: the singular integral is folded onto
/// `u = |ω − ω′| ∈ (0, U]` where the odd part cancels, then integrated with
/// composite Gauss–Legendre.
pub fn principal_value_shift(omega: f64, bath: &BathSpec) -> f64 {
    let lambda = LAMB_SHIFT_CUTOFF * bath.omega_c;
    let g = |w: f64| if w.abs() <= lambda { bath_rate(w, bath) } else { 0.0 };
    let upper = lambda + omega.abs();
    // panels fine near the singular point, then geometric growth
    let mut edges = vec![0.0];
    let mut width = 1e-3 * bath.temperature.min(bath.omega_c);
    while *edges.last().unwrap() < upper {
        let next = (edges.last().unwrap() + width).min(upper);
        edges.push(next);
        width *= 1.15;
    }
    // the integrand has a kink where ω ± u crosses ±Λ; add those as edges
    for kink in [lambda - omega, lambda + omega] {
        if kink > 0.0 && kink < upper {
            edges.push(kink);
        }
    }
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let (nodes, weights) = gauss_legendre_8();
    let mut total = 0.0;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, wt) in nodes.iter().zip(weights.iter()) {
            let u = mid + half * x;
            total += wt * half * (g(omega - u) - g(omega + u)) / u;
        }
    }
    total / (2.0 * PI)
}

fn gauss_legendre_8() -> ([f64; 8], [f64; 8]) {
    let x = [0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363];
    let w = [0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763];
    (
        [-x[3], -x[2], -x[1], -x[0], x[0], x[1], x[2], x[3]],
        [w[3], w[2], w[1], w[0], w[0], w[1], w[2], w[3]],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bath() -> BathSpec {
        BathSpec {
            kappa: 3.18e-4,
            ..Default::default()
        }
    }

    #[test]
    fn zero_frequency_limit() {
        let b = bath();
        assert_eq!(bath_rate(0.0, &b), 2.0 * PI * b.kappa * b.temperature);
        let near = bath_rate(1e-9, &b);
        assert!((near / bath_rate(0.0, &b) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn ratio_identity() {
        let b = bath();
        for k in 1..200 {
            let w = 0.05 * k as f64;
            let lhs = bath_rate(-w, &b) / bath_rate(w, &b);
            let rhs = (-w / b.temperature).exp() * (2.0 * w / b.omega_c).exp();
            assert!((lhs / rhs - 1.0).abs() < 1e-13, "w={w}");
            assert!(bath_rate(w, &b) >= 0.0 && bath_rate(-w, &b) >= 0.0);
        }
        let sym = BathSpec {
            cutoff: CutoffMode::Symmetric,
            ..b
        };
        let w = 1.7;
        let r = bath_rate(-w, &sym) / bath_rate(w, &sym);
        assert!((r / (-w / sym.temperature).exp() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn lamb_shift_matches_subtracted_quadrature() {
        // P∫ γ(w)/(ω − w) = ∫ (γ(w) − γ(ω))/(ω − w) + γ(ω)·ln((Λ + ω)/(Λ − ω))
        let b = bath();
        let lambda = LAMB_SHIFT_CUTOFF * b.omega_c;
        for omega in [-4.0, 0.5, 3.0] {
            let g0 = bath_rate(omega, &b);
            let n = 2_000_000;
            let h = 2.0 * lambda / n as f64;
            let mut total = 0.0;
            for k in 0..n {
                let w = -lambda + (k as f64 + 0.5) * h;
                total += h * (bath_rate(w, &b) - g0) / (omega - w);
            }
            total += g0 * ((lambda + omega) / (lambda - omega)).ln();
            let oracle = total / (2.0 * PI);
            let folded = principal_value_shift(omega, &b);
            assert!((oracle - folded).abs() < 1e-7 * oracle.abs().max(1e-3), "{oracle} vs {folded}");
        }
        let table = LambShiftTable::new(&b, 20.0, 2001);
        let direct = principal_value_shift(3.0, &b);
        assert!((table.eval(3.0) - direct).abs() < 1e-4 * direct.abs());
    }
}
