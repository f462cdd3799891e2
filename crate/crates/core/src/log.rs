//! Per-iteration convergence records and their CSV form.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{NmfError, Result};

/// One row of `log.csv`, written after each completed outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub iteration: usize,
    /// Cumulative solve time; objective evaluation and I/O are excluded.
    pub elapsed_seconds: f64,
    pub kl_objective: f64,
    pub total_objective: f64,
    #[serde(rename = "sparsity_W")]
    pub sparsity_w: f64,
    #[serde(rename = "sparsity_F")]
    pub sparsity_f: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceLog {
    records: Vec<LogRecord>,
}

impl ConvergenceLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        ConvergenceLog {
            records: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, record: LogRecord) {
        self.records.push(record);
    }

    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&LogRecord> {
        self.records.last()
    }

    pub fn capacity_bytes(&self) -> usize {
        self.records.capacity() * std::mem::size_of::<LogRecord>()
    }

    /// Iterations count up from 1 without gaps and elapsed time strictly increases.
    pub fn validate(&self) -> Result<()> {
        for (pos, rec) in self.records.iter().enumerate() {
            if rec.iteration != pos + 1 {
                return Err(NmfError::InvalidConfig(format!(
                    "record {pos} has iteration {} (expected {})",
                    rec.iteration,
                    pos + 1
                )));
            }
            if pos > 0 && rec.elapsed_seconds <= self.records[pos - 1].elapsed_seconds {
                return Err(NmfError::InvalidConfig(format!(
                    "elapsed_seconds not increasing at iteration {}",
                    rec.iteration
                )));
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        if self.records.is_empty() {
            wtr.write_record([
                "iteration",
                "elapsed_seconds",
                "kl_objective",
                "total_objective",
                "sparsity_W",
                "sparsity_F",
            ])?;
        }
        for rec in &self.records {
            wtr.serialize(rec)?;
        }
        wtr.flush().map_err(|e| NmfError::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let records = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<LogRecord>, _>>()?;
        let log = ConvergenceLog { records };
        log.validate()?;
        Ok(log)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| NmfError::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| NmfError::io(path, e))?;
        Self::read_csv(file)
    }
}
