//! Multiplicative-update baseline for KL NMF.
//!
//! ```text
//! F ← F ⊙ (W (V ⊘ WᵀF)) ⊘ (W·1 1ᵀ)      W ← W ⊙ (F (Vᵀ ⊘ FᵀW)) ⊘ (F·1 1ᵀ)
//! ```
//!
//! The ratio `V ⊘ WᵀF` is only formed on the stored entries of `V`. Every
//! entry is floored at `eps_mu`, so the factors stay strictly positive.

use crate::error::{NmfError, Result};
use crate::factor::{dot, row_sums, DenseFactor, FactorPair, RowSums};
use crate::memory::{self, MemoryLedger};
use crate::pool::for_each_column;
use crate::solver::{check_shapes, drive, init_factors, NmfConfig, NmfResult};
use crate::sparse::SparseMatrix;
use crate::subproblem::SolveStats;

pub const DEFAULT_EPS_MU: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq)]
pub struct MuState {
    pub factors: FactorPair,
    pub eps_mu: f64,
}

impl MuState {
    pub fn new(factors: FactorPair) -> Self {
        MuState {
            factors,
            eps_mu: DEFAULT_EPS_MU,
        }
    }
}

/// One multiplicative update of every column of `moving`.
fn update_side(
    data: &SparseMatrix,
    fixed: &DenseFactor,
    moving: &mut DenseFactor,
    sums_fixed: &RowSums,
    eps: f64,
    scratch: &mut [Vec<f64>],
) -> Result<()> {
    let r = fixed.n_latent();
    let sums = sums_fixed.values();
    for_each_column(moving.values_mut(), r, scratch, |acc, j, x| {
        acc.clear();
        acc.resize(r, 0.0);
        for (i, vij) in data.column_unchecked(j).iter() {
            let wi = fixed.column(i);
            let ratio = vij / (dot(wi, x) + eps);
            for (a, &w) in acc.iter_mut().zip(wi) {
                *a += w * ratio;
            }
        }
        for k in 0..r {
            x[k] = (x[k] * acc[k] / (sums[k] + eps)).max(eps);
        }
        Ok(())
    })
}

/// One full multiplicative iteration (F then W). `vt` must be `Vᵀ`.
pub fn mu_iterate(v: &SparseMatrix, vt: &SparseMatrix, state: &mut MuState, n_workers: usize) -> Result<()> {
    let r = state.factors.rank();
    let mut scratch: Vec<Vec<f64>> = (0..n_workers.max(1)).map(|_| Vec::with_capacity(r)).collect();
    let eps = state.eps_mu;
    update_factors(v, vt, &mut state.factors, eps, &mut scratch)
}

fn update_factors(
    v: &SparseMatrix,
    vt: &SparseMatrix,
    fp: &mut FactorPair,
    eps: f64,
    scratch: &mut [Vec<f64>],
) -> Result<()> {
    check_shapes(v, fp)?;
    if vt.n_rows() != v.n_cols() || vt.n_cols() != v.n_rows() || vt.nnz() != v.nnz() {
        return Err(NmfError::DimensionMismatch("vt is not the transpose of v".into()));
    }
    let sum_w = row_sums(&fp.w);
    update_side(v, &fp.w, &mut fp.f, &sum_w, eps, scratch)?;
    let sum_f = row_sums(&fp.f);
    update_side(vt, &fp.f, &mut fp.w, &sum_f, eps, scratch)
}

/// Runs the multiplicative baseline under the same outer loop, stopping
/// rules and logging as [`crate::factorize`]. Regularization is not applied
/// to the updates.
pub fn mu_factorize(v: &SparseMatrix, cfg: &NmfConfig) -> Result<NmfResult> {
    let factors = init_factors(v.n_rows(), v.n_cols(), cfg.rank, v.mean(), cfg.seed);
    mu_factorize_from(v, cfg, factors)
}

pub fn mu_factorize_from(v: &SparseMatrix, cfg: &NmfConfig, factors: FactorPair) -> Result<NmfResult> {
    cfg.validate()?;
    if v.nnz() == 0 {
        return Err(NmfError::EmptyMatrix);
    }
    check_shapes(v, &factors)?;
    let mut ledger = MemoryLedger::new();
    ledger.charge(memory::LABEL_DATA, v.storage_bytes());
    let vt = v.transpose();
    ledger.charge(memory::LABEL_DATA_T, vt.storage_bytes());
    ledger.charge(memory::LABEL_FACTORS, factors.storage_bytes());
    let r = cfg.rank;
    let mut scratch: Vec<Vec<f64>> = (0..cfg.n_workers).map(|_| Vec::with_capacity(r)).collect();
    ledger.charge(
        memory::LABEL_WORKERS,
        cfg.n_workers * r * std::mem::size_of::<f64>(),
    );
    ledger.charge(memory::LABEL_SMALL, 2 * r * std::mem::size_of::<f64>());

    drive(v, cfg, factors, &mut ledger, |fp| {
        update_factors(v, &vt, fp, DEFAULT_EPS_MU, &mut scratch)?;
        Ok(SolveStats::default())
    })
}
