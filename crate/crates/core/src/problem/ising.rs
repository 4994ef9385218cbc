//! Two-local Ising problems.
//!
//! Spins take values ±1. When configurations are packed into an integer
//! index, bit `q` set means spin `q` is −1; this matches the computational
//! basis, where |0⟩ has σᶻ = +1.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{QacError, Result};

pub type Spin = i8;

/// `Σ h_i s_i + Σ J_ij s_i s_j` over `num_spins` spins.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingProblem {
    num_spins: usize,
    fields: BTreeMap<usize, f64>,
    couplings: BTreeMap<(usize, usize), f64>,
}

impl IsingProblem {
    pub fn new(num_spins: usize) -> Self {
        IsingProblem {
            num_spins,
            fields: BTreeMap::new(),
            couplings: BTreeMap::new(),
        }
    }

    pub fn num_spins(&self) -> usize {
        self.num_spins
    }

    /// Sets `h_i`. Values must lie in [−1, 1]; zero removes the entry.
    pub fn set_field(&mut self, i: usize, value: f64) -> Result<()> {
        self.check_index(i)?;
        check_range(value)?;
        if value == 0.0 {
            self.fields.remove(&i);
        } else {
            self.fields.insert(i, value);
        }
        Ok(())
    }

    /// Sets `J_ij` for `i ≠ j`. Values must lie in [−1, 1]; zero removes the
    /// entry.
    pub fn set_coupling(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        self.check_index(i)?;
        self.check_index(j)?;
        if i == j {
            return Err(QacError::input(format!("coupling of spin {i} with itself")));
        }
        check_range(value)?;
        let key = (i.min(j), i.max(j));
        if value == 0.0 {
            self.couplings.remove(&key);
        } else {
            self.couplings.insert(key, value);
        }
        Ok(())
    }

    pub fn field(&self, i: usize) -> f64 {
        self.fields.get(&i).copied().unwrap_or(0.0)
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings.get(&(i.min(j), i.max(j))).copied().unwrap_or(0.0)
    }

    /// Nonzero fields in ascending spin order.
    pub fn fields(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.fields.iter().map(|(&i, &v)| (i, v))
    }

    /// Nonzero couplings as `((i, j), J)` with `i < j`, ascending.
    pub fn couplings(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.couplings.iter().map(|(&k, &v)| (k, v))
    }

    pub fn num_couplings(&self) -> usize {
        self.couplings.len()
    }

    /// Multiplies every field and coupling by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let mut out = IsingProblem::new(self.num_spins);
        for (i, h) in self.fields() {
            out.set_field(i, factor * h)?;
        }
        for ((i, j), v) in self.couplings() {
            out.set_coupling(i, j, factor * v)?;
        }
        Ok(out)
    }

    pub fn energy(&self, config: &[Spin]) -> Result<f64> {
        if config.len() != self.num_spins {
            return Err(QacError::input(format!(
                "configuration has {} spins, problem has {}",
                config.len(),
                self.num_spins
            )));
        }
        if let Some(bad) = config.iter().find(|&&s| s != 1 && s != -1) {
            return Err(QacError::input(format!("spin value {bad} is not ±1")));
        }
        let s = |i: usize| f64::from(config[i]);
        Ok(self.fields().map(|(i, h)| h * s(i)).sum::<f64>()
            + self.couplings().map(|((i, j), v)| v * s(i) * s(j)).sum::<f64>())
    }

    /// Energy of the configuration packed into `index` (bit set ↔ spin −1).
    pub fn energy_of_index(&self, index: u64) -> f64 {
        let s = |i: usize| if index >> i & 1 == 1 { -1.0 } else { 1.0 };
        self.fields().map(|(i, h)| h * s(i)).sum::<f64>()
            + self.couplings().map(|((i, j), v)| v * s(i) * s(j)).sum::<f64>()
    }

    /// For a chain problem (couplings exactly on consecutive spins, all
    /// nonzero) returns the coupling signs in order.
    pub fn chain_couplings(&self) -> Option<Vec<f64>> {
        if self.num_spins < 2 || self.couplings.len() != self.num_spins - 1 {
            return None;
        }
        (0..self.num_spins - 1)
            .map(|i| self.couplings.get(&(i, i + 1)).copied())
            .collect()
    }

    /// Parses CSV rows `h,<i>,<value>` and `J,<i>,<j>,<value>`. An optional
    /// `n,<count>` row fixes the spin count; otherwise it is one more than the
    /// largest index used. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        enum Row {
            H(usize, f64),
            J(usize, usize, f64),
        }
        let mut rows = Vec::new();
        let mut declared = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = |what: &str| QacError::format(lineno + 1, format!("{what} in `{line}`"));
            let idx = |s: &str| s.parse::<usize>().map_err(|_| bad("bad index"));
            let val = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| bad("bad value"));
            match fields.as_slice() {
                ["n", count] => declared = Some(idx(count)?),
                ["h", i, v] => rows.push((lineno + 1, Row::H(idx(i)?, val(v)?))),
                ["J", i, j, v] => rows.push((lineno + 1, Row::J(idx(i)?, idx(j)?, val(v)?))),
                _ => return Err(bad("unrecognized row")),
            }
        }
        let needed = rows
            .iter()
            .map(|(_, r)| match *r {
                Row::H(i, _) => i + 1,
                Row::J(i, j, _) => i.max(j) + 1,
            })
            .max()
            .unwrap_or(0);
        let num_spins = declared.unwrap_or(needed);
        if num_spins == 0 {
            return Err(QacError::format(0, "problem has no spins"));
        }
        let mut problem = IsingProblem::new(num_spins);
        for (line, row) in rows {
            let result = match row {
                Row::H(i, v) => problem.set_field(i, v),
                Row::J(i, j, v) => problem.set_coupling(i, j, v),
            };
            result.map_err(|e| QacError::format(line, e.to_string()))?;
        }
        Ok(problem)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("n,{}\n", self.num_spins);
        for (i, h) in self.fields() {
            let _ = writeln!(out, "h,{i},{h}");
        }
        for ((i, j), v) in self.couplings() {
            let _ = writeln!(out, "J,{i},{j},{v}");
        }
        out
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.num_spins {
            return Err(QacError::input(format!("spin {i} out of range {}", self.num_spins)));
        }
        Ok(())
    }
}

fn check_range(value: f64) -> Result<()> {
    if !value.is_finite() || value.abs() > 1.0 + 1e-12 {
        return Err(QacError::input(format!("value {value} outside [-1, 1]")));
    }
    Ok(())
}

/// Antiferromagnetic chain: `J_{i,i+1} = +1`, no fields.
pub fn make_af_chain(length: usize) -> Result<IsingProblem> {
    if length < 2 {
        return Err(QacError::input(format!("chain length must be at least 2, got {length}")));
    }
    let mut p = IsingProblem::new(length);
    for i in 0..length - 1 {
        p.set_coupling(i, i + 1, 1.0)?;
    }
    Ok(p)
}

pub fn ising_energy(config: &[Spin], problem: &IsingProblem) -> Result<f64> {
    problem.energy(config)
}

/// Unpacks an index into spins (bit set ↔ −1).
pub fn spins_from_index(index: u64, num_spins: usize) -> Vec<Spin> {
    (0..num_spins).map(|q| if index >> q & 1 == 1 { -1 } else { 1 }).collect()
}

/// Packs spins into an index (−1 ↔ bit set).
pub fn index_from_spins(config: &[Spin]) -> u64 {
    config
        .iter()
        .enumerate()
        .filter(|(_, &s)| s < 0)
        .fold(0, |acc, (q, _)| acc | 1 << q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_construction() {
        let p = make_af_chain(2).unwrap();
        assert_eq!(p.couplings().collect::<Vec<_>>(), vec![((0, 1), 1.0)]);
        assert_eq!(make_af_chain(86).unwrap().num_couplings(), 85);
        assert!(make_af_chain(1).is_err());
    }

    #[test]
    fn energies() {
        let p = make_af_chain(2).unwrap();
        assert_eq!(p.energy(&[1, -1]).unwrap(), -1.0);
        assert_eq!(p.energy(&[1, 1]).unwrap(), 1.0);
        assert!(p.energy(&[1]).is_err());
        assert!(p.energy(&[1, 0]).is_err());
        let p3 = make_af_chain(3).unwrap();
        let ground: Vec<Vec<Spin>> = (0..8)
            .map(|i| spins_from_index(i, 3))
            .filter(|c| p3.energy(c).unwrap() == -2.0)
            .collect();
        assert_eq!(ground, vec![vec![1, -1, 1], vec![-1, 1, -1]]);
    }

    #[test]
    fn index_convention() {
        let c = spins_from_index(0b101, 4);
        assert_eq!(c, vec![-1, 1, -1, 1]);
        assert_eq!(index_from_spins(&c), 0b101);
        let mut p = IsingProblem::new(3);
        p.set_field(0, 0.5).unwrap();
        p.set_coupling(2, 1, -0.25).unwrap();
        for i in 0..8 {
            assert_eq!(p.energy_of_index(i), p.energy(&spins_from_index(i, 3)).unwrap());
        }
    }

    #[test]
    fn validation() {
        let mut p = IsingProblem::new(2);
        assert!(p.set_coupling(0, 0, 0.5).is_err());
        assert!(p.set_coupling(0, 2, 0.5).is_err());
        assert!(p.set_field(0, 1.5).is_err());
        assert!(p.set_field(0, f64::NAN).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let text = "# pair\nh,0,0.5\nJ,0,1,-1\n";
        let p = IsingProblem::parse(text).unwrap();
        assert_eq!(p.num_spins(), 2);
        assert_eq!(p.coupling(1, 0), -1.0);
        assert_eq!(IsingProblem::parse(&p.to_csv()).unwrap(), p);
        assert_eq!(IsingProblem::parse("n,5\nJ,0,1,1\n").unwrap().num_spins(), 5);
        assert!(matches!(IsingProblem::parse("J,0,1\n"), Err(QacError::Format { line: 1, .. })));
        assert!(IsingProblem::parse("J,0,0,1\n").is_err());
        assert!(IsingProblem::parse("").is_err());
    }

    #[test]
    fn chain_detection() {
        assert_eq!(make_af_chain(4).unwrap().chain_couplings(), Some(vec![1.0; 3]));
        let mut p = make_af_chain(3).unwrap();
        p.set_coupling(0, 2, 1.0).unwrap();
        assert_eq!(p.chain_couplings(), None);
    }
}
