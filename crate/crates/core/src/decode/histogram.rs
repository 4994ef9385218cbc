//! Aggregate statistics over decoded sample sets.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::record::{Classifier, DecodedRecord};
use super::samples::SampleSet;
use crate::error::{QacError, Result};

/// Energies are binned to this resolution (in units of the logical coupling).
const ENERGY_BIN: f64 = 1e-6;

/// Frequencies of error classes at one logical position.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PositionErrors {
    pub weight1: f64,
    pub weight2: f64,
    pub weight3: f64,
    pub penalty_flip: f64,
}

/// Decodability at one (physical distance, energy) cell.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DecodabilityCell {
    pub frequency: f64,
    pub decodable_fraction: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HistogramSuite {
    /// Frequency of each physical Hamming distance.
    pub hamming_physical: BTreeMap<usize, f64>,
    /// Frequency of each logical Hamming distance.
    pub hamming_logical: BTreeMap<usize, f64>,
    /// Per logical position, frequency of 1-, 2- and 3-flip blocks and of
    /// flipped penalty qubits, relative to the matched ground.
    pub per_position: Vec<PositionErrors>,
    /// Keyed by physical distance and energy above the ground state divided by
    /// α (units of a unit logical coupling), in bins of 10⁻⁶.
    pub decodability: BTreeMap<(usize, i64), DecodabilityCell>,
    pub decodable_fraction: f64,
    pub total_count: u64,
}

impl HistogramSuite {
    pub fn energy_of_bin(bin: i64) -> f64 {
        bin as f64 * ENERGY_BIN
    }

    pub fn hamming_csv(map: &BTreeMap<usize, f64>) -> String {
        let mut out = String::from("d,frequency\n");
        for (d, f) in map {
            let _ = writeln!(out, "{d},{f}");
        }
        out
    }

    pub fn per_position_csv(&self) -> String {
        let mut out = String::from("position,weight1,weight2,weight3,penalty_flip\n");
        for (i, p) in self.per_position.iter().enumerate() {
            let _ = writeln!(out, "{i},{},{},{},{}", p.weight1, p.weight2, p.weight3, p.penalty_flip);
        }
        out
    }

    pub fn decodability_csv(&self) -> String {
        let mut out = String::from("d_physical,energy,frequency,decodable_fraction\n");
        for (&(d, bin), c) in &self.decodability {
            let _ = writeln!(out, "{d},{},{},{}", Self::energy_of_bin(bin), c.frequency, c.decodable_fraction);
        }
        out
    }
}

/// Decodes every record and accumulates the histograms.
///
/// With `symmetrize`, per-position frequencies are averaged with the mirrored
/// position, treating both chain directions as equivalent.
pub fn histogram_suite(samples: &SampleSet, classifier: &Classifier, symmetrize: bool) -> Result<HistogramSuite> {
    let total = samples.total_count();
    if total == 0 {
        return Err(QacError::input("sample set is empty"));
    }
    let num_logical = classifier.layout().num_logical();
    let alpha = classifier.problem().alpha();
    let mut suite = HistogramSuite {
        per_position: vec![PositionErrors::default(); num_logical],
        total_count: total,
        ..Default::default()
    };
    let mut decodable_counts: BTreeMap<(usize, i64), (u64, u64)> = BTreeMap::new();
    let mut decodable = 0u64;
    for rec in samples.records() {
        let r: DecodedRecord = classifier.record(&rec.bits)?;
        let w = rec.count as f64 / total as f64;
        *suite.hamming_physical.entry(r.d_physical).or_default() += w;
        *suite.hamming_logical.entry(r.d_logical).or_default() += w;
        for (i, (&weight, &pf)) in r.per_block_error_weight.iter().zip(&r.penalty_flipped).enumerate() {
            let slot = &mut suite.per_position[i];
            match weight {
                1 => slot.weight1 += w,
                2 => slot.weight2 += w,
                3 => slot.weight3 += w,
                _ => {}
            }
            if pf {
                slot.penalty_flip += w;
            }
        }
        let energy = (r.energy - classifier.ground_energy()) / alpha;
        let bin = (energy / ENERGY_BIN).round() as i64;
        let cell = decodable_counts.entry((r.d_physical, bin)).or_default();
        cell.0 += rec.count;
        if r.decodable {
            cell.1 += rec.count;
            decodable += rec.count;
        }
    }
    if symmetrize {
        let orig = suite.per_position.clone();
        for (i, slot) in suite.per_position.iter_mut().enumerate() {
            let m = orig[num_logical - 1 - i];
            slot.weight1 = 0.5 * (orig[i].weight1 + m.weight1);
            slot.weight2 = 0.5 * (orig[i].weight2 + m.weight2);
            slot.weight3 = 0.5 * (orig[i].weight3 + m.weight3);
            slot.penalty_flip = 0.5 * (orig[i].penalty_flip + m.penalty_flip);
        }
    }
    suite.decodability = decodable_counts
        .into_iter()
        .map(|(k, (n, d))| {
            let cell = DecodabilityCell {
                frequency: n as f64 / total as f64,
                decodable_fraction: d as f64 / n as f64,
            };
            (k, cell)
        })
        .collect();
    suite.decodable_fraction = decodable as f64 / total as f64;
    Ok(suite)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decode::SampleRecord;
    use crate::problem::{encode_problem, make_af_chain, EncodedProblem, Strategy};

    fn setup(n: usize) -> (EncodedProblem, Classifier) {
        let enc = Strategy::Qac.compact_encoding(n).unwrap();
        let p = encode_problem(&make_af_chain(n).unwrap(), Strategy::Qac, 0.5, 0.25, enc.as_ref()).unwrap();
        let c = Classifier::new(&p).unwrap();
        (p, c)
    }

    #[test]
    fn all_ground() {
        let (p, c) = setup(3);
        let mut set = SampleSet::new(p.num_physical());
        for g in c.grounds().to_vec() {
            set.push(SampleRecord { embedding_id: 0, count: 5, bits: p.code_state(&g) }).unwrap();
        }
        let h = histogram_suite(&set, &c, false).unwrap();
        assert_eq!(h.hamming_physical, BTreeMap::from([(0, 1.0)]));
        assert_eq!(h.decodable_fraction, 1.0);
        assert_eq!(h.decodability.len(), 1);
    }

    #[test]
    fn one_flip_record() {
        let (p, c) = setup(3);
        let g = c.grounds()[0].clone();
        let mut set = SampleSet::new(p.num_physical());
        set.push(SampleRecord { embedding_id: 0, count: 3, bits: p.code_state(&g) }).unwrap();
        let mut flipped = p.code_state(&g);
        flipped[4] = -flipped[4];
        set.push(SampleRecord { embedding_id: 0, count: 1, bits: flipped }).unwrap();
        let h = histogram_suite(&set, &c, false).unwrap();
        assert_eq!(h.hamming_physical, BTreeMap::from([(0, 0.75), (1, 0.25)]));
        assert_eq!(h.per_position[1].weight1, 0.25);
        assert_eq!(h.per_position[0], PositionErrors::default());
        // flipping one problem qubit of a middle block costs 2α(2 bonds)+2β, over α
        let bin = ((2.0 * 2.0 * 0.5 + 2.0 * 0.25) / 0.5 / 1e-6_f64).round() as i64;
        assert_eq!(h.decodability[&(1, bin)].decodable_fraction, 1.0);
    }

    #[test]
    fn logical_flip_cascade() {
        let (p, c) = setup(5);
        let g = c.grounds()[0].clone();
        let mut set = SampleSet::new(p.num_physical());
        for k in 1..5 {
            let logical: Vec<_> = g.iter().enumerate().map(|(i, &s)| if i >= k { -s } else { s }).collect();
            set.push(SampleRecord { embedding_id: 0, count: 1, bits: p.code_state(&logical) }).unwrap();
        }
        let h = histogram_suite(&set, &c, true).unwrap();
        assert!(h.hamming_physical.keys().all(|d| d % 4 == 0));
        for slot in &h.per_position {
            assert_eq!(slot.weight3, slot.penalty_flip);
        }
    }
}
