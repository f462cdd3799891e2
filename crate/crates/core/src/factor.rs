//! Dense factor matrices and their row sums.

use crate::error::{NmfError, Result};

/// Dense nonnegative `r × n_items` factor stored column-major: the
/// `r` latent coefficients of one item are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseFactor {
    n_latent: usize,
    n_items: usize,
    values: Vec<f64>,
}

impl DenseFactor {
    pub fn zeros(n_latent: usize, n_items: usize) -> Self {
        DenseFactor {
            n_latent,
            n_items,
            values: vec![0.0; n_latent * n_items],
        }
    }

    pub fn from_column_major(n_latent: usize, n_items: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_latent * n_items {
            return Err(NmfError::DimensionMismatch(format!(
                "expected {} values for a {n_latent}x{n_items} factor, got {}",
                n_latent * n_items,
                values.len()
            )));
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(NmfError::NegativeEntry {
                row: p % n_latent.max(1),
                col: p / n_latent.max(1),
                value: values[p],
            });
        }
        Ok(DenseFactor {
            n_latent,
            n_items,
            values,
        })
    }

    /// Builds from `rows[k][item]`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_latent = rows.len();
        let n_items = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_items) {
            return Err(NmfError::DimensionMismatch("ragged factor rows".into()));
        }
        let mut values = vec![0.0; n_latent * n_items];
        for (k, row) in rows.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                values[i * n_latent + k] = v;
            }
        }
        Self::from_column_major(n_latent, n_items, values)
    }

    pub fn n_latent(&self) -> usize {
        self.n_latent
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, k: usize, item: usize) -> f64 {
        self.values[item * self.n_latent + k]
    }

    #[inline]
    pub fn column(&self, item: usize) -> &[f64] {
        &self.values[item * self.n_latent..(item + 1) * self.n_latent]
    }

    pub fn columns(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.n_latent)
    }

    /// Fraction of entries that are exactly zero.
    pub fn sparsity(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        let zeros = self.values.iter().filter(|&&v| v == 0.0).count();
        zeros as f64 / self.values.len() as f64
    }

    pub fn nnz(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0.0).count()
    }

    pub fn sq_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn storage_bytes(&self) -> usize {
        self.values.len() * std::mem::size_of::<f64>()
    }

    /// Copies the factor into latent-major layout so that each latent row
    /// is one contiguous slice of length `n_items`.
    pub fn to_panel(&self) -> RowPanel {
        let mut panel = RowPanel::with_capacity(self.n_latent * self.n_items);
        panel.fill_from(self);
        panel
    }
}

/// Latent-major copy of a factor: row `k` (one latent component across all
/// items) is `data[k * n_items..(k + 1) * n_items]`.
///
/// This is the `A` operand of a column subproblem with `A[i, k] = row(k)[i]`.
#[derive(Debug, Clone, Default)]
pub struct RowPanel {
    n_latent: usize,
    n_items: usize,
    data: Vec<f64>,
}

impl RowPanel {
    pub fn with_capacity(capacity: usize) -> Self {
        RowPanel {
            n_latent: 0,
            n_items: 0,
            data: Vec::with_capacity(capacity),
        }
    }

    /// Refills from `factor`, reusing the existing buffer when it is large enough.
    pub fn fill_from(&mut self, factor: &DenseFactor) {
        let (r, n) = (factor.n_latent, factor.n_items);
        self.n_latent = r;
        self.n_items = n;
        self.data.clear();
        self.data.resize(r * n, 0.0);
        for (i, col) in factor.columns().enumerate() {
            for (k, &v) in col.iter().enumerate() {
                self.data[k * n + i] = v;
            }
        }
    }

    pub fn n_latent(&self) -> usize {
        self.n_latent
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    #[inline]
    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.n_items..(k + 1) * self.n_items]
    }

    pub fn capacity_bytes(&self) -> usize {
        self.data.capacity() * std::mem::size_of::<f64>()
    }
}

/// Per-latent-row sums of a factor (`W·1` or `F·1`).
#[derive(Debug, Clone, PartialEq)]
pub struct RowSums(pub Vec<f64>);

impl RowSums {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &RowSums) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }
}

/// Row sums of `m`, accumulated item by item in a fixed order.
pub fn row_sums(m: &DenseFactor) -> RowSums {
    let mut sums = vec![0.0; m.n_latent];
    for col in m.columns() {
        for (s, &v) in sums.iter_mut().zip(col) {
            *s += v;
        }
    }
    RowSums(sums)
}

/// `W` (`r × n`) and `F` (`r × m`) with `V ≈ Wᵀ F`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub w: DenseFactor,
    pub f: DenseFactor,
}

impl FactorPair {
    pub fn rank(&self) -> usize {
        self.w.n_latent()
    }

    /// `(Wᵀ F)[i, j]`.
    pub fn reconstruct_at(&self, i: usize, j: usize) -> f64 {
        dot(self.w.column(i), self.f.column(j))
    }

    pub fn storage_bytes(&self) -> usize {
        self.w.storage_bytes() + self.f.storage_bytes()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
