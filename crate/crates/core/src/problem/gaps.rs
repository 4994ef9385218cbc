//! Exhaustive classical spectra of small Ising problems.
//!
//! Coefficients that are exactly representable as fractions with modest
//! denominators (such as 0.3 = 3/10) are converted to integers over a common
//! denominator, so level energies and gaps are computed without rounding.
//! Otherwise energies are accumulated in floating point and levels within
//! [`FLOAT_LEVEL_TOLERANCE`] are merged.

use num_rational::Rational64;

use super::encode::EncodedProblem;
use super::ising::IsingProblem;
use crate::error::{QacError, Result};

/// Largest problem enumerated exhaustively.
pub const MAX_BRUTE_FORCE_SPINS: usize = 24;
/// Merge tolerance for the floating-point fallback.
pub const FLOAT_LEVEL_TOLERANCE: f64 = 1e-9;
const MAX_DENOMINATOR: i64 = 1 << 20;

/// One excited level of a classical spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationLevel {
    /// Energy above the ground level.
    pub gap: f64,
    /// The same gap as an exact fraction when the coefficients allowed it.
    pub exact_gap: Option<Rational64>,
    /// Number of configurations at this level.
    pub degeneracy: u64,
}

/// All distinct energy levels, ascending, as `(energy, degeneracy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalSpectrum {
    pub levels: Vec<(f64, u64)>,
    /// Common denominator of the exact integer energies, if used.
    pub denominator: Option<i64>,
    exact: Vec<i64>,
}

impl ClassicalSpectrum {
    pub fn ground_energy(&self) -> f64 {
        self.levels[0].0
    }

    pub fn ground_degeneracy(&self) -> u64 {
        self.levels[0].1
    }

    /// Excited levels relative to the ground level.
    pub fn excitations(&self) -> Vec<ExcitationLevel> {
        let e0 = self.ground_energy();
        self.levels
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &(e, d))| ExcitationLevel {
                gap: e - e0,
                exact_gap: self
                    .denominator
                    .map(|den| Rational64::new(self.exact[k] - self.exact[0], den)),
                degeneracy: d,
            })
            .collect()
    }
}

/// Integer form of the problem: `energy = (Σ h s + Σ J s s) / denominator`.
struct IntegerProblem {
    denominator: i64,
    fields: Vec<i64>,
    couplings: Vec<Vec<(usize, i64)>>,
}

fn to_rational(x: f64) -> Option<Rational64> {
    let r = Rational64::approximate_float(x)?;
    let back = *r.numer() as f64 / *r.denom() as f64;
    (*r.denom() <= MAX_DENOMINATOR && back == x).then_some(r)
}

fn integer_form(problem: &IsingProblem) -> Option<IntegerProblem> {
    let values: Vec<f64> = problem
        .fields()
        .map(|(_, v)| v)
        .chain(problem.couplings().map(|(_, v)| v))
        .collect();
    let rationals: Vec<Rational64> = values.iter().map(|&v| to_rational(v)).collect::<Option<_>>()?;
    let mut den: i64 = 1;
    for r in &rationals {
        let d = *r.denom();
        den = den.checked_mul(d / gcd(den, d))?;
        if den > MAX_DENOMINATOR {
            return None;
        }
    }
    let scale = |r: Rational64| -> Option<i64> { r.numer().checked_mul(den / r.denom()) };
    let n = problem.num_spins();
    let mut fields = vec![0i64; n];
    let mut couplings = vec![Vec::new(); n];
    for (i, h) in problem.fields() {
        fields[i] = scale(to_rational(h)?)?;
    }
    for ((i, j), v) in problem.couplings() {
        let c = scale(to_rational(v)?)?;
        couplings[i].push((j, c));
        couplings[j].push((i, c));
    }
    Some(IntegerProblem {
        denominator: den,
        fields,
        couplings,
    })
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

/// Visits every configuration in Gray-code order with its energy, updated
/// incrementally by single flips.
fn gray_walk<T: Copy + std::ops::Add<Output = T> + std::ops::Mul<Output = T> + From<i8>>(
    n: usize,
    fields: &[T],
    couplings: &[Vec<(usize, T)>],
    initial: T,
    mut visit: impl FnMut(T),
) {
    let mut spins = vec![1i8; n];
    let mut energy = initial;
    visit(energy);
    for step in 1u64..1u64 << n {
        let q = step.trailing_zeros() as usize;
        let mut local = fields[q];
        for &(j, c) in &couplings[q] {
            local = local + c * T::from(spins[j]);
        }
        // flipping s_q changes the energy by −2 s_q · local
        energy = energy + T::from(-2 * spins[q]) * local;
        spins[q] = -spins[q];
        visit(energy);
    }
}

/// Enumerates every configuration and groups energies into levels.
pub fn classical_spectrum(problem: &IsingProblem) -> Result<ClassicalSpectrum> {
    let n = problem.num_spins();
    if n > MAX_BRUTE_FORCE_SPINS {
        return Err(QacError::Resource {
            what: "spins for exhaustive enumeration",
            requested: n,
            cap: MAX_BRUTE_FORCE_SPINS,
        });
    }
    if let Some(ip) = integer_form(problem) {
        let initial: i64 = ip.fields.iter().sum::<i64>()
            + ip.couplings.iter().flatten().map(|&(_, c)| c).sum::<i64>() / 2;
        let mut energies = Vec::with_capacity(1 << n);
        gray_walk(n, &ip.fields, &ip.couplings, initial, |e| energies.push(e));
        energies.sort_unstable();
        let mut exact: Vec<i64> = Vec::new();
        let mut levels = Vec::new();
        for e in energies {
            if exact.last() == Some(&e) {
                levels.last_mut().map(|l: &mut (f64, u64)| l.1 += 1);
            } else {
                exact.push(e);
                levels.push((e as f64 / ip.denominator as f64, 1));
            }
        }
        return Ok(ClassicalSpectrum {
            levels,
            denominator: Some(ip.denominator),
            exact,
        });
    }

    let mut fields = vec![0.0; n];
    let mut couplings = vec![Vec::new(); n];
    for (i, h) in problem.fields() {
        fields[i] = h;
    }
    for ((i, j), v) in problem.couplings() {
        couplings[i].push((j, v));
        couplings[j].push((i, v));
    }
    let mut energies = Vec::with_capacity(1 << n);
    gray_walk(n, &fields, &couplings, problem.energy_of_index(0), |e| energies.push(e));
    energies.sort_unstable_by(f64::total_cmp);
    let mut levels: Vec<(f64, u64)> = Vec::new();
    for e in energies {
        match levels.last_mut() {
            Some((e0, d)) if e - *e0 <= FLOAT_LEVEL_TOLERANCE => *d += 1,
            _ => levels.push((e, 1)),
        }
    }
    Ok(ClassicalSpectrum {
        levels,
        denominator: None,
        exact: Vec::new(),
    })
}

/// Excitation gaps above the ground level of the physical problem with their
/// degeneracies, ascending.
pub fn classical_excitation_gaps(problem: &EncodedProblem) -> Result<Vec<ExcitationLevel>> {
    Ok(classical_spectrum(problem.physical())?.excitations())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{encode_problem, make_af_chain, Strategy};

    fn qac_pair(alpha: f64, beta: f64) -> EncodedProblem {
        let enc = Strategy::Qac.compact_encoding(2).unwrap();
        encode_problem(&make_af_chain(2).unwrap(), Strategy::Qac, alpha, beta, enc.as_ref()).unwrap()
    }

    /// Naive oracle: energies straight from the definition, levels by sorting.
    fn naive_levels(p: &IsingProblem, tol: f64) -> Vec<(f64, u64)> {
        let mut e: Vec<f64> = (0..1u64 << p.num_spins()).map(|i| p.energy_of_index(i)).collect();
        e.sort_by(f64::total_cmp);
        let mut levels: Vec<(f64, u64)> = Vec::new();
        for x in e {
            match levels.last_mut() {
                Some((y, d)) if x - *y <= tol => *d += 1,
                _ => levels.push((x, 1)),
            }
        }
        levels
    }

    #[test]
    fn unencoded_pair_gap() {
        let p = encode_problem(&make_af_chain(2).unwrap(), Strategy::Unencoded, 1.0, 0.0, None).unwrap();
        let gaps = classical_excitation_gaps(&p).unwrap();
        assert_eq!(gaps.len(), 1);
        assert_eq!(gaps[0].exact_gap, Some(Rational64::from_integer(2)));
        assert_eq!(gaps[0].degeneracy, 2);
    }

    #[test]
    fn qac_pair_levels_exact() {
        let p = qac_pair(0.3, 0.1);
        let gaps = classical_excitation_gaps(&p).unwrap();
        let r = |n: i64, d: i64| Some(Rational64::new(n, d));
        let find = |g| gaps.iter().find(|l| l.exact_gap == g).map(|l| l.degeneracy);
        // degeneracies frozen from an exact fraction-arithmetic enumeration
        assert_eq!(find(r(4, 10)), Some(6));
        assert_eq!(find(r(8, 10)), Some(18));
        assert_eq!(find(r(18, 10)), Some(26));
        let spectrum = classical_spectrum(p.physical()).unwrap();
        assert_eq!(spectrum.ground_degeneracy(), 2);
    }

    #[test]
    fn matches_naive_enumeration() {
        for (alpha, beta) in [(0.3, 0.1), (0.3, 0.2), (1.0, 0.2), (0.7, 0.45)] {
            let p = qac_pair(alpha, beta);
            let fast = classical_spectrum(p.physical()).unwrap();
            let naive = naive_levels(p.physical(), 1e-9);
            assert_eq!(fast.levels.len(), naive.len());
            for (a, b) in fast.levels.iter().zip(&naive) {
                assert!((a.0 - b.0).abs() < 1e-9);
                assert_eq!(a.1, b.1);
            }
        }
    }

    #[test]
    fn float_fallback() {
        let mut p = IsingProblem::new(3);
        p.set_coupling(0, 1, std::f64::consts::FRAC_1_SQRT_2).unwrap();
        p.set_coupling(1, 2, 1.0 / 3.0).unwrap();
        p.set_field(2, 0.1).unwrap();
        let s = classical_spectrum(&p).unwrap();
        assert!(s.denominator.is_none());
        let naive = naive_levels(&p, FLOAT_LEVEL_TOLERANCE);
        assert_eq!(s.levels.len(), naive.len());
        for (a, b) in s.levels.iter().zip(&naive) {
            assert!((a.0 - b.0).abs() < 1e-12 && a.1 == b.1);
        }
    }

    #[test]
    fn resource_cap() {
        let p = IsingProblem::new(25);
        assert!(matches!(classical_spectrum(&p), Err(QacError::Resource { .. })));
    }
}
