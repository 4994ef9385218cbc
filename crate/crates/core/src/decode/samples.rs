//! Readout sample sets and their CSV form.

use std::fmt::Write as _;

use crate::error::{QacError, Result};
use crate::problem::Spin;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRecord {
    pub embedding_id: usize,
    pub count: u64,
    /// Physical spins in ascending qubit order.
    pub bits: Vec<Spin>,
}

/// Readouts over a fixed number of physical qubits.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SampleSet {
    num_qubits: usize,
    records: Vec<SampleRecord>,
}

impl SampleSet {
    pub fn new(num_qubits: usize) -> Self {
        SampleSet {
            num_qubits,
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, record: SampleRecord) -> Result<()> {
        if record.count == 0 {
            return Err(QacError::input("sample count must be at least 1"));
        }
        if record.bits.len() != self.num_qubits {
            return Err(QacError::input(format!(
                "sample has {} qubits, set has {}",
                record.bits.len(),
                self.num_qubits
            )));
        }
        if record.bits.iter().any(|&s| s != 1 && s != -1) {
            return Err(QacError::input("sample spins must be ±1"));
        }
        self.records.push(record);
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn records(&self) -> &[SampleRecord] {
        &self.records
    }

    pub fn total_count(&self) -> u64 {
        self.records.iter().map(|r| r.count).sum()
    }

    /// Parses `embedding_id,count,bits` rows, with `bits` a 0/1 string in
    /// ascending qubit order (0 ↔ +1). A header row is optional. All rows must
    /// have the same number of bits.
    pub fn parse(text: &str) -> Result<Self> {
        let mut set: Option<SampleSet> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() || line.starts_with("embedding_id") {
                continue;
            }
            let bad = |what: &str| QacError::format(lineno + 1, what.to_string());
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let [id, count, bits] = fields.as_slice() else {
                return Err(bad("expected `embedding_id,count,bits`"));
            };
            let embedding_id = id.parse().map_err(|_| bad("bad embedding id"))?;
            let count = count.parse().map_err(|_| bad("bad count"))?;
            let bits = bits
                .chars()
                .map(|c| match c {
                    '0' => Ok(1),
                    '1' => Ok(-1),
                    _ => Err(bad("bits must be 0 or 1")),
                })
                .collect::<Result<Vec<Spin>>>()?;
            let set = set.get_or_insert_with(|| SampleSet::new(bits.len()));
            set.push(SampleRecord { embedding_id, count, bits })
                .map_err(|e| QacError::format(lineno + 1, e.to_string()))?;
        }
        set.ok_or_else(|| QacError::format(0, "sample file has no records"))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("embedding_id,count,bits\n");
        for r in &self.records {
            let bits: String = r.bits.iter().map(|&s| if s > 0 { '0' } else { '1' }).collect();
            let _ = writeln!(out, "{},{},{bits}", r.embedding_id, r.count);
        }
        out
    }
}
