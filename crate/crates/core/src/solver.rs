//! Alternating minimization: F-sweep with W fixed, then W-sweep with F fixed.
//!
//! Each sweep splits into independent column subproblems, one per data
//! column (for F) or data row (for W), and fans them out over worker
//! threads. A fresh random coordinate order is drawn once per outer
//! iteration and shared by both sweeps and every column.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NmfError, Result};
use crate::factor::{dot, row_sums, DenseFactor, FactorPair, RowPanel, RowSums};
use crate::log::{ConvergenceLog, LogRecord};
use crate::memory::{self, MemoryLedger, MemoryReport};
use crate::pool::for_each_column;
use crate::sparse::SparseMatrix;
use crate::subproblem::{
    solve_column, Penalty, ProductUpdate, SolveStats, SubproblemWorkspace, Tolerances,
};

/// Regularization weights. Index 1 applies to `W`, index 2 to `F`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RegConfig {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl RegConfig {
    pub fn w_penalty(&self) -> Penalty {
        Penalty::new(self.alpha1, self.beta1)
    }

    pub fn f_penalty(&self) -> Penalty {
        Penalty::new(self.alpha2, self.beta2)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        if ok(self.alpha1) && ok(self.alpha2) && ok(self.beta1) && ok(self.beta2) {
            Ok(())
        } else {
            Err(NmfError::InvalidConfig(
                "regularization weights must be finite and nonnegative".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmfConfig {
    pub rank: usize,
    pub reg: RegConfig,
    pub max_outer_iters: usize,
    /// Stop once `(prev − cur) / max(1, prev)` of the total objective drops
    /// below this. Zero disables the test.
    pub rel_obj_tol: f64,
    pub seed: u64,
    pub n_workers: usize,
    pub tolerances: Tolerances,
    pub product_update: ProductUpdate,
    /// Stop before starting an iteration once this much solve time is spent.
    pub time_budget: Option<Duration>,
}

impl Default for NmfConfig {
    fn default() -> Self {
        NmfConfig {
            rank: 10,
            reg: RegConfig::default(),
            max_outer_iters: 100,
            rel_obj_tol: 1e-6,
            seed: 0,
            n_workers: 1,
            tolerances: Tolerances::default(),
            product_update: ProductUpdate::Dense,
            time_budget: None,
        }
    }
}

impl NmfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(NmfError::InvalidConfig("rank must be at least 1".into()));
        }
        if self.n_workers == 0 {
            return Err(NmfError::InvalidConfig("need at least one worker".into()));
        }
        if self.rel_obj_tol.is_nan() || self.rel_obj_tol < 0.0 {
            return Err(NmfError::InvalidConfig("rel_obj_tol must be >= 0".into()));
        }
        self.reg.validate()?;
        self.tolerances.validate()
    }
}

/// KL divergence and the regularized total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub kl: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct NmfResult {
    pub factors: FactorPair,
    pub initial: Objective,
    pub log: ConvergenceLog,
    pub iterations_run: usize,
    pub converged: bool,
    pub memory: MemoryReport,
    pub stats: SolveStats,
}

impl NmfResult {
    pub fn final_objective(&self) -> Objective {
        self.log.last().map_or(self.initial, |r| Objective {
            kl: r.kl_objective,
            total: r.total_objective,
        })
    }

    pub fn elapsed_seconds(&self) -> f64 {
        self.log.last().map_or(0.0, |r| r.elapsed_seconds)
    }
}

/// Random positive factors, `W: r × n` and `F: r × m`, entries uniform on
/// `(0, scale]` with `scale = 2·sqrt(mean/r)` so that `E[(WᵀF)_ij] = mean`.
pub fn init_factors(n: usize, m: usize, r: usize, mean: f64, seed: u64) -> FactorPair {
    let scale = if mean > 0.0 && mean.is_finite() {
        2.0 * (mean / r as f64).sqrt()
    } else {
        1.0
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |len: usize| -> Vec<f64> {
        (0..len)
            .map(|_| (1.0 - rng.random::<f64>()) * scale)
            .collect()
    };
    let w = draw(r * n);
    let f = draw(r * m);
    FactorPair {
        w: DenseFactor::from_column_major(r, n, w).expect("sized"),
        f: DenseFactor::from_column_major(r, m, f).expect("sized"),
    }
}

/// Generator of the per-iteration coordinate orders, on a stream separate
/// from factor initialization.
pub(crate) fn order_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// KL divergence of `V` from `WᵀF` (plus the regularized total), visiting
/// only stored entries of `V`. The dense part `Σ_ij (WᵀF)_ij` is `⟨W·1, F·1⟩`.
pub fn full_objective(
    v: &SparseMatrix,
    factors: &FactorPair,
    reg: &RegConfig,
    eps_div: f64,
) -> Result<Objective> {
    check_shapes(v, factors)?;
    let (w, f) = (&factors.w, &factors.f);
    let mut kl = row_sums(w).dot(&row_sums(f));
    for j in 0..v.n_cols() {
        let fj = f.column(j);
        for (i, vij) in v.column_unchecked(j).iter() {
            let x = dot(w.column(i), fj);
            kl += vij * (vij / (x + eps_div)).ln() - vij;
        }
    }
    let total = kl
        + 0.5 * reg.alpha1 * w.sq_norm()
        + 0.5 * reg.alpha2 * f.sq_norm()
        + reg.beta1 * w.l1_norm()
        + reg.beta2 * f.l1_norm();
    Ok(Objective { kl, total })
}

pub(crate) fn check_shapes(v: &SparseMatrix, factors: &FactorPair) -> Result<()> {
    let (w, f) = (&factors.w, &factors.f);
    if w.n_latent() != f.n_latent() || w.n_items() != v.n_rows() || f.n_items() != v.n_cols() {
        return Err(NmfError::DimensionMismatch(format!(
            "V is {}x{}, W is {}x{}, F is {}x{}",
            v.n_rows(),
            v.n_cols(),
            w.n_latent(),
            w.n_items(),
            f.n_latent(),
            f.n_items()
        )));
    }
    Ok(())
}

/// Reusable per-factorization scratch: the latent-major copy of the fixed
/// factor and one workspace per worker.
pub(crate) struct SweepScratch {
    panel: RowPanel,
    workspaces: Vec<SubproblemWorkspace>,
}

impl SweepScratch {
    pub(crate) fn new(max_items: usize, r: usize, n_workers: usize, mode: ProductUpdate) -> Self {
        SweepScratch {
            panel: RowPanel::with_capacity(max_items * r),
            workspaces: (0..n_workers)
                .map(|_| SubproblemWorkspace::with_mode(max_items, mode))
                .collect(),
        }
    }
}

/// Updates every column of `moving` by solving its subproblem against
/// `fixed`. `v_oriented` is `V` when solving for `F` and `Vᵀ` when solving
/// for `W`; `sums_fixed` must be `row_sums(fixed)`.
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    v_oriented: &SparseMatrix,
    fixed: &DenseFactor,
    moving: &mut DenseFactor,
    sums_fixed: &RowSums,
    ids: &[usize],
    penalty: Penalty,
    tol: &Tolerances,
    n_workers: usize,
) -> Result<SolveStats> {
    let mut scratch = SweepScratch::new(
        fixed.n_items(),
        fixed.n_latent(),
        n_workers.max(1),
        ProductUpdate::Dense,
    );
    sweep_with(
        &mut scratch,
        v_oriented,
        fixed,
        moving,
        sums_fixed,
        ids,
        penalty,
        tol,
    )
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn sweep_with(
    scratch: &mut SweepScratch,
    v_oriented: &SparseMatrix,
    fixed: &DenseFactor,
    moving: &mut DenseFactor,
    sums_fixed: &RowSums,
    ids: &[usize],
    penalty: Penalty,
    tol: &Tolerances,
) -> Result<SolveStats> {
    let r = fixed.n_latent();
    if moving.n_latent() != r
        || sums_fixed.0.len() != r
        || ids.len() != r
        || v_oriented.n_rows() != fixed.n_items()
        || v_oriented.n_cols() != moving.n_items()
    {
        return Err(NmfError::DimensionMismatch(format!(
            "sweep over {}x{} data with fixed {}x{} and moving {}x{}",
            v_oriented.n_rows(),
            v_oriented.n_cols(),
            r,
            fixed.n_items(),
            moving.n_latent(),
            moving.n_items()
        )));
    }
    scratch.panel.fill_from(fixed);
    let panel = &scratch.panel;
    let sums = sums_fixed.values();
    for_each_column(
        moving.values_mut(),
        r,
        &mut scratch.workspaces,
        |ws, j, x| {
            solve_column(
                v_oriented.column_unchecked(j),
                panel,
                sums,
                x,
                penalty,
                ids,
                tol,
                ws,
            )
        },
    )?;
    let mut stats = SolveStats::default();
    for ws in &mut scratch.workspaces {
        stats.merge(&ws.stats);
        ws.stats = SolveStats::default();
    }
    Ok(stats)
}

/// Shared outer loop for every solver: runs `step` until the relative
/// decrease of the total objective falls below tolerance, the iteration cap
/// or the time budget is reached. Objective evaluation is not timed.
pub(crate) fn drive<S>(
    v: &SparseMatrix,
    cfg: &NmfConfig,
    mut factors: FactorPair,
    ledger: &mut MemoryLedger,
    mut step: S,
) -> Result<NmfResult>
where
    S: FnMut(&mut FactorPair) -> Result<SolveStats>,
{
    let eps = cfg.tolerances.eps_div;
    let initial = full_objective(v, &factors, &cfg.reg, eps)?;
    let mut log = ConvergenceLog::with_capacity(cfg.max_outer_iters.min(1024));
    ledger.charge(memory::LABEL_LOG, log.capacity_bytes());

    let mut prev_total = initial.total;
    let mut elapsed = Duration::ZERO;
    let mut converged = false;
    let mut iterations_run = 0;
    let mut stats = SolveStats::default();

    for iteration in 1..=cfg.max_outer_iters {
        if cfg.time_budget.is_some_and(|b| elapsed >= b) {
            break;
        }
        let started = Instant::now();
        stats.merge(&step(&mut factors)?);
        elapsed += started.elapsed().max(Duration::from_nanos(1));

        let obj = full_objective(v, &factors, &cfg.reg, eps)?;
        let before = log.capacity_bytes();
        log.push(LogRecord {
            iteration,
            elapsed_seconds: elapsed.as_secs_f64(),
            kl_objective: obj.kl,
            total_objective: obj.total,
            sparsity_w: factors.w.sparsity(),
            sparsity_f: factors.f.sparsity(),
        });
        ledger.charge(memory::LABEL_LOG, log.capacity_bytes() - before);
        iterations_run = iteration;

        if cfg.rel_obj_tol > 0.0 {
            let decrease = (prev_total - obj.total) / prev_total.max(1.0);
            if decrease < cfg.rel_obj_tol {
                converged = true;
                break;
            }
        }
        prev_total = obj.total;
    }

    Ok(NmfResult {
        factors,
        initial,
        log,
        iterations_run,
        converged,
        memory: MemoryReport::from_ledger(ledger),
        stats,
    })
}

/// Factorizes `V ≈ WᵀF` by alternating sparse randomized coordinate descent.
pub fn factorize(v: &SparseMatrix, cfg: &NmfConfig) -> Result<NmfResult> {
    let factors = init_factors(v.n_rows(), v.n_cols(), cfg.rank, v.mean(), cfg.seed);
    factorize_from(v, cfg, factors)
}

/// Like [`factorize`] but starting from the given factors.
pub fn factorize_from(v: &SparseMatrix, cfg: &NmfConfig, factors: FactorPair) -> Result<NmfResult> {
    cfg.validate()?;
    if v.nnz() == 0 {
        return Err(NmfError::EmptyMatrix);
    }
    check_shapes(v, &factors)?;
    if factors.rank() != cfg.rank {
        return Err(NmfError::DimensionMismatch(format!(
            "initial factors have rank {}, config asks for {}",
            factors.rank(),
            cfg.rank
        )));
    }
    let (n, m, r) = (v.n_rows(), v.n_cols(), cfg.rank);

    let mut ledger = MemoryLedger::new();
    ledger.charge(memory::LABEL_DATA, v.storage_bytes());
    let vt = v.transpose();
    ledger.charge(memory::LABEL_DATA_T, vt.storage_bytes());
    ledger.charge(memory::LABEL_FACTORS, factors.storage_bytes());

    let mut scratch = SweepScratch::new(n.max(m), r, cfg.n_workers, cfg.product_update);
    ledger.charge(memory::LABEL_PANEL, scratch.panel.capacity_bytes());
    ledger.charge(
        memory::LABEL_WORKERS,
        scratch.workspaces.iter().map(|w| w.capacity_bytes()).sum(),
    );
    let mut ids: Vec<usize> = (0..r).collect();
    // ids plus the two row-sum vectors
    ledger.charge(memory::LABEL_SMALL, 3 * r * std::mem::size_of::<f64>());
    let mut rng = order_rng(cfg.seed);

    let reg = cfg.reg;
    let tol = cfg.tolerances;
    drive(v, cfg, factors, &mut ledger, |fp| {
        ids.shuffle(&mut rng);
        let sum_w = row_sums(&fp.w);
        let mut stats = sweep_with(
            &mut scratch,
            v,
            &fp.w,
            &mut fp.f,
            &sum_w,
            &ids,
            reg.f_penalty(),
            &tol,
        )?;
        let sum_f = row_sums(&fp.f);
        stats.merge(&sweep_with(
            &mut scratch,
            &vt,
            &fp.f,
            &mut fp.w,
            &sum_f,
            &ids,
            reg.w_penalty(),
            &tol,
        )?);
        Ok(stats)
    })
}

/// Sum of per-column projected-gradient residuals over both factors.
pub fn aggregate_kkt_residual(
    v: &SparseMatrix,
    vt: &SparseMatrix,
    factors: &FactorPair,
    reg: &RegConfig,
    eps_div: f64,
) -> Result<f64> {
    check_shapes(v, factors)?;
    let mut total = 0.0;
    for (data, fixed, moving, penalty) in [
        (v, &factors.w, &factors.f, reg.f_penalty()),
        (vt, &factors.f, &factors.w, reg.w_penalty()),
    ] {
        let panel = fixed.to_panel();
        let sums = row_sums(fixed);
        for j in 0..data.n_cols() {
            total += crate::subproblem::kkt_residual(
                data.column_unchecked(j),
                &panel,
                sums.values(),
                moving.column(j),
                penalty,
                eps_div,
            );
        }
    }
    Ok(total)
}
