//! Accounting of the major buffers a factorization holds.
//!
//! Counts only what the solver allocates on purpose (data arrays, factors,
//! scratch); it is not an OS-level RSS figure.

use serde::Serialize;

#[derive(Debug, Clone, Default)]
pub struct MemoryLedger {
    current: usize,
    peak: usize,
    entries: Vec<(&'static str, usize)>,
}

impl MemoryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge(&mut self, label: &'static str, bytes: usize) {
        self.current += bytes;
        self.peak = self.peak.max(self.current);
        match self.entries.iter_mut().find(|(l, _)| *l == label) {
            Some((_, b)) => *b += bytes,
            None => self.entries.push((label, bytes)),
        }
    }

    pub fn release(&mut self, label: &'static str, bytes: usize) {
        self.current = self.current.saturating_sub(bytes);
        if let Some((_, b)) = self.entries.iter_mut().find(|(l, _)| *l == label) {
            *b = b.saturating_sub(bytes);
        }
    }

    pub fn current(&self) -> usize {
        self.current
    }

    pub fn peak(&self) -> usize {
        self.peak
    }

    pub fn bytes_for(&self, label: &str) -> usize {
        self.entries
            .iter()
            .filter(|(l, _)| *l == label)
            .map(|(_, b)| *b)
            .sum()
    }

    pub fn entries(&self) -> &[(&'static str, usize)] {
        &self.entries
    }
}

/// Peak accounted bytes plus the nnz-proportional reference size
/// `CSC(V) + CSC(Vᵀ) + factor arrays + worker buffers`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MemoryReport {
    pub peak_accounted_bytes: usize,
    pub reference_bytes: usize,
    pub breakdown: Vec<(String, usize)>,
}

pub(crate) const LABEL_DATA: &str = "data_csc";
pub(crate) const LABEL_DATA_T: &str = "data_transpose_csc";
pub(crate) const LABEL_FACTORS: &str = "factors";
pub(crate) const LABEL_PANEL: &str = "factor_panel";
pub(crate) const LABEL_WORKERS: &str = "worker_buffers";
pub(crate) const LABEL_SMALL: &str = "row_sums_and_order";
pub(crate) const LABEL_LOG: &str = "convergence_log";

impl MemoryReport {
    pub(crate) fn from_ledger(ledger: &MemoryLedger) -> Self {
        let reference = [LABEL_DATA, LABEL_DATA_T, LABEL_FACTORS, LABEL_PANEL, LABEL_WORKERS]
            .iter()
            .map(|l| ledger.bytes_for(l))
            .sum();
        MemoryReport {
            peak_accounted_bytes: ledger.peak(),
            reference_bytes: reference,
            breakdown: ledger
                .entries()
                .iter()
                .map(|(l, b)| (l.to_string(), *b))
                .collect(),
        }
    }
}
