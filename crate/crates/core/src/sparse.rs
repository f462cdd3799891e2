//! Compressed sparse column storage for the nonnegative data matrix.

use crate::error::{NmfError, Result};

/// Nonnegative sparse matrix in compressed sparse column (CSC) layout.
///
/// Only strictly positive finite values are stored. Row indices within each
/// column are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Borrowed view of one column: parallel slices of row indices and values.
#[derive(Debug, Clone, Copy)]
pub struct ColumnView<'a> {
    pub indices: &'a [usize],
    pub values: &'a [f64],
}

impl<'a> ColumnView<'a> {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }
}

impl SparseMatrix {
    /// Builds a matrix from 0-based `(row, col, value)` triplets.
    ///
    /// Explicit zeros are dropped. Negative or non-finite values, duplicate
    /// coordinates and out-of-range indices are errors.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut counts = vec![0usize; n_cols + 1];
        for &(row, col, value) in triplets {
            if row >= n_rows {
                return Err(NmfError::IndexOutOfRange {
                    index: row,
                    len: n_rows,
                });
            }
            if col >= n_cols {
                return Err(NmfError::IndexOutOfRange {
                    index: col,
                    len: n_cols,
                });
            }
            if !value.is_finite() {
                return Err(NmfError::NonFiniteEntry { row, col });
            }
            if value < 0.0 {
                return Err(NmfError::NegativeEntry { row, col, value });
            }
            if value > 0.0 {
                counts[col + 1] += 1;
            }
        }
        for j in 0..n_cols {
            counts[j + 1] += counts[j];
        }
        let nnz = counts[n_cols];
        let col_ptr = counts.clone();
        let mut next = counts;
        let mut row_idx = vec![0usize; nnz];
        let mut values = vec![0.0f64; nnz];
        for &(row, col, value) in triplets {
            if value > 0.0 {
                let slot = next[col];
                row_idx[slot] = row;
                values[slot] = value;
                next[col] += 1;
            }
        }

        // sort each column by row, then reject duplicates
        let mut perm: Vec<usize> = Vec::new();
        for j in 0..n_cols {
            let (start, end) = (col_ptr[j], col_ptr[j + 1]);
            let rows = &row_idx[start..end];
            if rows.windows(2).all(|w| w[0] < w[1]) {
                continue;
            }
            perm.clear();
            perm.extend(0..end - start);
            perm.sort_by_key(|&p| rows[p]);
            let sorted_rows: Vec<usize> = perm.iter().map(|&p| row_idx[start + p]).collect();
            let sorted_vals: Vec<f64> = perm.iter().map(|&p| values[start + p]).collect();
            if let Some(w) = sorted_rows.windows(2).find(|w| w[0] == w[1]) {
                return Err(NmfError::DuplicateEntry { row: w[0], col: j });
            }
            row_idx[start..end].copy_from_slice(&sorted_rows);
            values[start..end].copy_from_slice(&sorted_vals);
        }

        Ok(SparseMatrix {
            n_rows,
            n_cols,
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Builds a matrix directly from CSC arrays, validating every invariant.
    pub fn from_csc(
        n_rows: usize,
        n_cols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if col_ptr.len() != n_cols + 1 || col_ptr[0] != 0 {
            return Err(NmfError::DimensionMismatch(format!(
                "col_ptr must have length {} and start at 0",
                n_cols + 1
            )));
        }
        if row_idx.len() != values.len() || col_ptr[n_cols] != values.len() {
            return Err(NmfError::DimensionMismatch(
                "col_ptr[n_cols], row_idx and values disagree on nnz".into(),
            ));
        }
        for j in 0..n_cols {
            let (start, end) = (col_ptr[j], col_ptr[j + 1]);
            if start > end {
                return Err(NmfError::DimensionMismatch(format!(
                    "col_ptr decreases at column {j}"
                )));
            }
            for p in start..end {
                let row = row_idx[p];
                if row >= n_rows {
                    return Err(NmfError::IndexOutOfRange {
                        index: row,
                        len: n_rows,
                    });
                }
                if p > start && row_idx[p - 1] >= row {
                    return Err(NmfError::DuplicateEntry { row, col: j });
                }
                let value = values[p];
                if !value.is_finite() {
                    return Err(NmfError::NonFiniteEntry { row, col: j });
                }
                if value < 0.0 {
                    return Err(NmfError::NegativeEntry { row, col: j, value });
                }
                if value == 0.0 {
                    return Err(NmfError::ExplicitZero { row, col: j });
                }
            }
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Fraction of entries that are zero.
    pub fn sparsity(&self) -> f64 {
        let cells = self.n_rows as f64 * self.n_cols as f64;
        if cells == 0.0 {
            return 1.0;
        }
        1.0 - self.nnz() as f64 / cells
    }

    /// Mean over all `n_rows * n_cols` cells, zeros included.
    pub fn mean(&self) -> f64 {
        let cells = self.n_rows as f64 * self.n_cols as f64;
        if cells == 0.0 {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / cells
    }

    /// Bytes held by the three CSC arrays.
    pub fn storage_bytes(&self) -> usize {
        self.col_ptr.len() * std::mem::size_of::<usize>()
            + self.row_idx.len() * std::mem::size_of::<usize>()
            + self.values.len() * std::mem::size_of::<f64>()
    }

    pub fn column(&self, j: usize) -> Result<ColumnView<'_>> {
        if j >= self.n_cols {
            return Err(NmfError::IndexOutOfRange {
                index: j,
                len: self.n_cols,
            });
        }
        Ok(self.column_unchecked(j))
    }

    #[inline]
    pub(crate) fn column_unchecked(&self, j: usize) -> ColumnView<'_> {
        let (start, end) = (self.col_ptr[j], self.col_ptr[j + 1]);
        ColumnView {
            indices: &self.row_idx[start..end],
            values: &self.values[start..end],
        }
    }

    /// Iterates `(row, col, value)` in column-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_cols).flat_map(move |j| self.column_unchecked(j).iter().map(move |(i, v)| (i, j, v)))
    }

    /// Counting-sort transpose: O(nnz + n_rows + n_cols), rows come out sorted.
    pub fn transpose(&self) -> SparseMatrix {
        let mut col_ptr = vec![0usize; self.n_rows + 1];
        for &i in &self.row_idx {
            col_ptr[i + 1] += 1;
        }
        for i in 0..self.n_rows {
            col_ptr[i + 1] += col_ptr[i];
        }
        let nnz = self.nnz();
        let mut row_idx = vec![0usize; nnz];
        let mut values = vec![0.0f64; nnz];
        let mut next = col_ptr.clone();
        for j in 0..self.n_cols {
            for (i, v) in self.column_unchecked(j).iter() {
                let slot = next[i];
                row_idx[slot] = j;
                values[slot] = v;
                next[i] += 1;
            }
        }
        SparseMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            col_ptr,
            row_idx,
            values,
        }
    }
}
