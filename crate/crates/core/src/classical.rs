//! Independent-kink thermal model of antiferromagnetic chains, an exact
//! Boltzmann oracle, and least-squares fits of success-versus-length data.
//!
//! For `H = α Σ s_i s_{i+1}` at temperature `T` every bond is violated
//! independently with probability `q = 1/(1 + e^{2α/T})`, so the number of
//! kinks is binomial over the `N − 1` bonds.

use crate::error::{QacError, Result};
use crate::problem::IsingProblem;

/// Largest problem handled by [`boltzmann_oracle`].
pub const MAX_ORACLE_SPINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinkModel {
    alpha: f64,
    temperature: f64,
}

impl KinkModel {
    pub fn new(alpha: f64, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(QacError::input(format!("temperature {temperature} must be positive")));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(QacError::input(format!("alpha {alpha} must be nonnegative")));
        }
        Ok(KinkModel { alpha, temperature })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    fn ratio(&self) -> f64 {
        2.0 * self.alpha / self.temperature
    }

    /// Probability that a given bond is violated: `1/(1 + e^{2α/T})`.
    pub fn kink_probability(&self) -> f64 {
        logistic(-self.ratio())
    }
}

/// `1/(1 + e^{−x})` without overflow.
fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `p(α) = 1/(1 + e^{−2α/T})`.
pub fn flip_probability(model: &KinkModel) -> f64 {
    logistic(model.ratio())
}

/// Probability of a kink-free chain, `(1/(1 + e^{−2α/T}))^{N−1}`.
pub fn no_kink_probability(model: &KinkModel, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(QacError::input("chain length must be positive"));
    }
    Ok(((n - 1) as f64 * (-model.kink_probability()).ln_1p()).exp())
}

/// `P_N(k)` for `k = 0..N−1`: the binomial distribution of kink counts.
pub fn kink_distribution(model: &KinkModel, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(QacError::input(format!("chain length must be at least 2, got {n}")));
    }
    let slots = n - 1;
    let q = model.kink_probability();
    let (ln_q, ln_1q) = (q.ln(), (-q).ln_1p());
    let mut ln_binom = 0.0;
    let mut out = Vec::with_capacity(n);
    for k in 0..=slots {
        if k > 0 {
            ln_binom += ((slots - k + 1) as f64).ln() - (k as f64).ln();
        }
        let term = if q == 0.0 {
            if k == 0 { 1.0 } else { 0.0 }
        } else {
            (ln_binom + k as f64 * ln_q + (slots - k) as f64 * ln_1q).exp()
        };
        out.push(term);
    }
    Ok(out)
}

/// Exact Gibbs distribution over all configurations, indexed as in
/// [`crate::problem::spins_from_index`].
pub fn boltzmann_oracle(problem: &IsingProblem, temperature: f64) -> Result<Vec<f64>> {
    let n = problem.num_spins();
    if n > MAX_ORACLE_SPINS {
        return Err(QacError::Resource {
            what: "spins for the Boltzmann oracle",
            requested: n,
            cap: MAX_ORACLE_SPINS,
        });
    }
    if !(temperature > 0.0) {
        return Err(QacError::input(format!("temperature {temperature} must be positive")));
    }
    let energies: Vec<f64> = (0..1u64 << n).map(|i| problem.energy_of_index(i)).collect();
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let mut weights: Vec<f64> = energies.iter().map(|e| (-(e - e0) / temperature).exp()).collect();
    let z: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= z);
    Ok(weights)
}

/// Outcome of a one-parameter least-squares fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub p: f64,
    /// Sum of squared residuals at the optimum.
    pub residual: f64,
    /// Set when every data point equals 1, so that `p = 0` trivially.
    pub degenerate: bool,
}

/// Relative tolerance of the golden-section refinement.
pub const FIT_TOLERANCE: f64 = 1e-10;

fn check_fit_data(data: &[(f64, f64)]) -> Result<()> {
    if data.len() < 3 {
        return Err(QacError::input(format!("need at least 3 points, got {}", data.len())));
    }
    if let Some(&(n, p)) = data.iter().find(|&&(n, p)| !(p > 0.0 && p <= 1.0) || !n.is_finite()) {
        return Err(QacError::input(format!("point ({n}, {p}) outside the fit domain")));
    }
    Ok(())
}

/// Minimizes `f` over `[0, hi]`: scans a logarithmic grid (plus zero) for
/// the best sample, then refines between its neighbours by golden section.
fn minimize(f: impl Fn(f64) -> f64, hi: f64) -> (f64, f64) {
    const SCAN: usize = 400;
    let lo_exp = -14.0f64;
    let hi_exp = hi.log10();
    let mut grid = vec![0.0];
    grid.extend((0..=SCAN).map(|k| 10f64.powf(lo_exp + (hi_exp - lo_exp) * k as f64 / SCAN as f64)));
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let best = (0..grid.len()).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(grid.len() - 1)]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > FIT_TOLERANCE * b.abs().max(f64::MIN_POSITIVE) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let (fx, fbest) = (f(x), values[best]);
    if fx <= fbest { (x, fx) } else { (grid[best], fbest) }
}

/// Least-squares fit of `P(N) = 1/(1 + p N²)` with `p ≥ 0`, uniform weights,
/// in probability space.
pub fn lorentzian_fit(data: &[(f64, f64)]) -> Result<FitResult> {
    check_fit_data(data)?;
    if data.iter().all(|&(_, p)| p == 1.0) {
        return Ok(FitResult { p: 0.0, residual: 0.0, degenerate: true });
    }
    let sse = |p: f64| data.iter().map(|&(n, y)| (y - 1.0 / (1.0 + p * n * n)).powi(2)).sum::<f64>();
    let (p, residual) = minimize(sse, 1e3);
    Ok(FitResult { p, residual, degenerate: false })
}

/// Least-squares fit of the uncorrelated-error model `P(N) = (1 − p)^{N−1}`
/// with `p ∈ [0, 1]`.
pub fn exponential_fit(data: &[(f64, f64)]) -> Result<FitResult> {
    check_fit_data(data)?;
    if data.iter().all(|&(_, p)| p == 1.0) {
        return Ok(FitResult { p: 0.0, residual: 0.0, degenerate: true });
    }
    let sse = |p: f64| {
        data.iter()
            .map(|&(n, y)| (y - ((n - 1.0) * (-p).ln_1p()).exp()).powi(2))
            .sum::<f64>()
    };
    let (p, residual) = minimize(sse, 1.0);
    Ok(FitResult { p, residual, degenerate: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::make_af_chain;

    fn kink_count(index: u64, n: usize) -> usize {
        (0..n - 1).filter(|&i| (index >> i & 1) == (index >> (i + 1) & 1)).count()
    }

    #[test]
    fn flip_probability_values() {
        assert_eq!(flip_probability(&KinkModel::new(0.0, 1.0).unwrap()), 0.5);
        let m = KinkModel::new(0.3, 0.3).unwrap();
        assert!((flip_probability(&m) - 1.0 / (1.0 + (-2.0f64).exp())).abs() < 1e-15);
        let mut last = 0.0;
        for a in [0.1, 1.0, 10.0, 100.0, 1000.0] {
            let p = flip_probability(&KinkModel::new(a, 1.0).unwrap());
            assert!(p >= last && p <= 1.0);
            last = p;
        }
        assert!(KinkModel::new(1.0, 0.0).is_err());
    }

    #[test]
    fn no_kink_limits() {
        assert_eq!(no_kink_probability(&KinkModel::new(0.3, 1.0).unwrap(), 1).unwrap(), 1.0);
        let cold = KinkModel::new(0.3, 1e-4).unwrap();
        assert!((no_kink_probability(&cold, 50).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_kink_matches_oracle() {
        let (alpha, t) = (0.3, 1.0);
        let chain = make_af_chain(5).unwrap().scaled(alpha).unwrap();
        let gibbs = boltzmann_oracle(&chain, t).unwrap();
        let ground_mass: f64 = (0..32).filter(|&i| kink_count(i, 5) == 0).map(|i| gibbs[i as usize]).sum();
        let model = KinkModel::new(alpha, t).unwrap();
        assert!((no_kink_probability(&model, 5).unwrap() - ground_mass).abs() < 1e-14);
    }

    #[test]
    fn distribution_properties() {
        let model = KinkModel::new(0.7, 0.4).unwrap();
        let d = kink_distribution(&model, 9).unwrap();
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let d2 = kink_distribution(&model, 2).unwrap();
        assert!((d2[1] / d2[0] - (-2.0 * 0.7 / 0.4f64).exp()).abs() < 1e-12);
        assert!(kink_distribution(&model, 1).is_err());
    }

    #[test]
    fn oracle_limits() {
        let mut spin = IsingProblem::new(1);
        spin.set_field(0, 1.0).unwrap();
        let g = boltzmann_oracle(&spin, 0.5).unwrap();
        assert!((g[1] / g[0] - (2.0f64 / 0.5).exp()).abs() < 1e-9);
        let hot = boltzmann_oracle(&make_af_chain(4).unwrap(), 1e12).unwrap();
        assert!(hot.iter().all(|&w| (w - 1.0 / 16.0).abs() < 1e-10));
        assert!(boltzmann_oracle(&IsingProblem::new(21), 1.0).is_err());
    }

    fn lorentzian_data(p: f64) -> Vec<(f64, f64)> {
        (2..=86).map(|n| (n as f64, 1.0 / (1.0 + p * (n * n) as f64))).collect()
    }

    #[test]
    fn lorentzian_roundtrip() {
        for p in [1.94e-4, 3.41e-3] {
            let fit = lorentzian_fit(&lorentzian_data(p)).unwrap();
            assert!((fit.p - p).abs() / p < 1e-3, "{p} -> {}", fit.p);
        }
    }

    #[test]
    fn constant_data_is_degenerate() {
        let fit = lorentzian_fit(&[(2.0, 1.0), (3.0, 1.0), (4.0, 1.0)]).unwrap();
        assert_eq!((fit.p, fit.degenerate), (0.0, true));
        assert!(lorentzian_fit(&[(2.0, 1.0), (3.0, 1.0)]).is_err());
        assert!(lorentzian_fit(&[(2.0, 1.0), (3.0, 0.0), (4.0, 0.5)]).is_err());
    }

    #[test]
    fn exponential_model_fits_worse() {
        let data = lorentzian_data(3.41e-3);
        let l = lorentzian_fit(&data).unwrap();
        let e = exponential_fit(&data).unwrap();
        assert!(e.residual > 100.0 * l.residual.max(1e-20));
        let exp_data: Vec<_> = (2..=30).map(|n| (n as f64, 0.98f64.powi(n - 1))).collect();
        assert!((exponential_fit(&exp_data).unwrap().p - 0.02).abs() < 1e-8);
    }
}
