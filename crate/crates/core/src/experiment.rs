//! Experiment drivers behind the `srcd` command line: single runs, SRCD vs
//! MU races and scaling grids. Every driver writes plain CSV / JSON / TSV /
//! MatrixMarket files into an output directory.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::fs;
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{NmfError, Result};
use crate::factor::FactorPair;
use crate::mtx::{load_matrix_market, save_factor_matrix_market, save_factor_tsv};
use crate::mu::mu_factorize_from;
use crate::solver::{factorize_from, init_factors, NmfConfig, NmfResult};
use crate::sparse::SparseMatrix;
use crate::synth::{synthesize, SyntheticSpec};

pub const W_ORIENTATION: &str = "W is r x n: row k is latent component k over the n data rows";
pub const F_ORIENTATION: &str = "F is r x m: column j holds the coefficients of data column j";

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    File(PathBuf),
    Synthetic(SyntheticSpec),
}

impl Dataset {
    pub fn load(&self) -> Result<SparseMatrix> {
        match self {
            Dataset::File(path) => load_matrix_market(path),
            Dataset::Synthetic(spec) => synthesize(spec),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Srcd,
    Mu,
}

impl FromStr for Algorithm {
    type Err = NmfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "srcd" => Ok(Algorithm::Srcd),
            "mu" => Ok(Algorithm::Mu),
            other => Err(NmfError::InvalidConfig(format!(
                "unknown algorithm '{other}' (expected srcd or mu)"
            ))),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Srcd => "srcd",
            Algorithm::Mu => "mu",
        })
    }
}

pub fn run_algorithm(
    algorithm: Algorithm,
    v: &SparseMatrix,
    cfg: &NmfConfig,
    init: FactorPair,
) -> Result<NmfResult> {
    match algorithm {
        Algorithm::Srcd => factorize_from(v, cfg, init),
        Algorithm::Mu => mu_factorize_from(v, cfg, init),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub algorithm: String,
    pub n_rows: usize,
    pub n_cols: usize,
    pub nnz: usize,
    pub rank: usize,
    pub iterations: usize,
    pub converged: bool,
    pub initial_kl_objective: f64,
    pub initial_total_objective: f64,
    pub final_kl_objective: f64,
    pub final_total_objective: f64,
    pub sparsity_w: f64,
    pub sparsity_f: f64,
    /// Solve time only.
    pub solve_seconds: f64,
    /// Solve plus objective evaluation; file I/O excluded.
    pub wall_seconds: f64,
    pub peak_accounted_bytes: usize,
    pub reference_bytes: usize,
    pub w_orientation: String,
    pub f_orientation: String,
}

impl Summary {
    fn new(algorithm: Algorithm, v: &SparseMatrix, cfg: &NmfConfig, res: &NmfResult, wall: Duration) -> Self {
        let fin = res.final_objective();
        Summary {
            algorithm: algorithm.to_string(),
            n_rows: v.n_rows(),
            n_cols: v.n_cols(),
            nnz: v.nnz(),
            rank: cfg.rank,
            iterations: res.iterations_run,
            converged: res.converged,
            initial_kl_objective: res.initial.kl,
            initial_total_objective: res.initial.total,
            final_kl_objective: fin.kl,
            final_total_objective: fin.total,
            sparsity_w: res.factors.w.sparsity(),
            sparsity_f: res.factors.f.sparsity(),
            solve_seconds: res.elapsed_seconds(),
            wall_seconds: wall.as_secs_f64(),
            peak_accounted_bytes: res.memory.peak_accounted_bytes,
            reference_bytes: res.memory.reference_bytes,
            w_orientation: W_ORIENTATION.into(),
            f_orientation: F_ORIENTATION.into(),
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| NmfError::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| NmfError::io(path, e))
}

/// Writes `log.csv`, `W.mtx`, `W.tsv`, `F.mtx`, `F.tsv` and `summary.json`.
pub fn write_run_outputs(out_dir: &Path, res: &NmfResult, summary: &Summary) -> Result<()> {
    ensure_dir(out_dir)?;
    res.log.save(out_dir.join("log.csv"))?;
    save_factor_matrix_market(out_dir.join("W.mtx"), &res.factors.w, W_ORIENTATION)?;
    save_factor_tsv(out_dir.join("W.tsv"), &res.factors.w)?;
    save_factor_matrix_market(out_dir.join("F.mtx"), &res.factors.f, F_ORIENTATION)?;
    save_factor_tsv(out_dir.join("F.tsv"), &res.factors.f)?;
    write_json(&out_dir.join("summary.json"), summary)
}

/// Loads or synthesizes the data, runs one solver and writes its outputs.
pub fn run_experiment(
    dataset: &Dataset,
    algorithm: Algorithm,
    cfg: &NmfConfig,
    out_dir: &Path,
) -> Result<Summary> {
    cfg.validate()?;
    let v = dataset.load()?;
    if v.nnz() == 0 {
        return Err(NmfError::EmptyMatrix);
    }
    let init = init_factors(v.n_rows(), v.n_cols(), cfg.rank, v.mean(), cfg.seed);
    let started = Instant::now();
    let res = run_algorithm(algorithm, &v, cfg, init)?;
    let wall = started.elapsed();
    let summary = Summary::new(algorithm, &v, cfg, &res, wall);
    write_run_outputs(out_dir, &res, &summary)?;
    Ok(summary)
}

/// Hash of the exact bit patterns of both factors.
pub fn factor_fingerprint(factors: &FactorPair) -> u64 {
    let mut h = DefaultHasher::new();
    for part in [&factors.w, &factors.f] {
        (part.n_latent(), part.n_items()).hash(&mut h);
        for v in part.values() {
            v.to_bits().hash(&mut h);
        }
    }
    h.finish()
}

#[derive(Debug, Clone, Serialize)]
pub struct RaceEntry {
    pub algorithm: String,
    pub init_fingerprint: u64,
    pub iterations: usize,
    pub initial_kl_objective: f64,
    pub final_kl_objective: f64,
    pub solve_seconds: f64,
    pub sparsity_w: f64,
    pub sparsity_f: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RaceOutcome {
    pub budget_seconds: f64,
    pub data_sparsity: f64,
    pub srcd: RaceEntry,
    pub mu: RaceEntry,
}

impl RaceOutcome {
    /// `(mu − srcd) / mu` of the final KL objectives.
    pub fn relative_margin(&self) -> f64 {
        (self.mu.final_kl_objective - self.srcd.final_kl_objective) / self.mu.final_kl_objective
    }
}

/// Runs SRCD and MU from bitwise-identical initial factors, each for the
/// same solve-time budget. The convergence tolerance and iteration cap of
/// `cfg` are ignored; only the budget stops a run.
pub fn race_matrix(v: &SparseMatrix, cfg: &NmfConfig, budget: Duration) -> Result<(RaceOutcome, Vec<(Algorithm, NmfResult)>)> {
    cfg.validate()?;
    if v.nnz() == 0 {
        return Err(NmfError::EmptyMatrix);
    }
    let init = init_factors(v.n_rows(), v.n_cols(), cfg.rank, v.mean(), cfg.seed);
    let run_cfg = NmfConfig {
        rel_obj_tol: 0.0,
        max_outer_iters: usize::MAX,
        time_budget: Some(budget),
        ..cfg.clone()
    };
    let mut entries = Vec::with_capacity(2);
    let mut results = Vec::with_capacity(2);
    for algorithm in [Algorithm::Srcd, Algorithm::Mu] {
        let start = init.clone();
        let init_fingerprint = factor_fingerprint(&start);
        let res = run_algorithm(algorithm, v, &run_cfg, start)?;
        entries.push(RaceEntry {
            algorithm: algorithm.to_string(),
            init_fingerprint,
            iterations: res.iterations_run,
            initial_kl_objective: res.initial.kl,
            final_kl_objective: res.final_objective().kl,
            solve_seconds: res.elapsed_seconds(),
            sparsity_w: res.factors.w.sparsity(),
            sparsity_f: res.factors.f.sparsity(),
        });
        results.push((algorithm, res));
    }
    let mu = entries.pop().expect("two entries");
    let srcd = entries.pop().expect("two entries");
    Ok((
        RaceOutcome {
            budget_seconds: budget.as_secs_f64(),
            data_sparsity: v.sparsity(),
            srcd,
            mu,
        },
        results,
    ))
}

/// Merged trace: one row per logged iteration of either solver, plus the
/// shared starting point at `elapsed_seconds = 0`.
pub fn write_race_csv<W: Write>(out: W, results: &[(Algorithm, NmfResult)]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record([
        "algorithm",
        "iteration",
        "elapsed_seconds",
        "kl_objective",
        "total_objective",
    ])?;
    for (algorithm, res) in results {
        let name = algorithm.to_string();
        wtr.write_record([
            name.clone(),
            "0".into(),
            "0".into(),
            res.initial.kl.to_string(),
            res.initial.total.to_string(),
        ])?;
        for rec in res.log.records() {
            wtr.write_record([
                name.clone(),
                rec.iteration.to_string(),
                rec.elapsed_seconds.to_string(),
                rec.kl_objective.to_string(),
                rec.total_objective.to_string(),
            ])?;
        }
    }
    wtr.flush().map_err(|e| NmfError::io("<csv>", e))?;
    Ok(())
}

/// Race on a dataset; writes `race.csv` and `race_summary.json`.
pub fn race(dataset: &Dataset, cfg: &NmfConfig, budget_seconds: f64, out_dir: &Path) -> Result<RaceOutcome> {
    if !(budget_seconds >= 0.0 && budget_seconds.is_finite()) {
        return Err(NmfError::InvalidConfig("budget must be a nonnegative number of seconds".into()));
    }
    let v = dataset.load()?;
    let (outcome, results) = race_matrix(&v, cfg, Duration::from_secs_f64(budget_seconds))?;
    ensure_dir(out_dir)?;
    let path = out_dir.join("race.csv");
    let file = fs::File::create(&path).map_err(|e| NmfError::io(&path, e))?;
    write_race_csv(std::io::BufWriter::new(file), &results)?;
    write_json(&out_dir.join("race_summary.json"), &outcome)?;
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingRow {
    pub r: usize,
    pub n_threads: usize,
    pub wall_seconds: f64,
}

/// Solve time of exactly `iters` SRCD iterations on `v` for every
/// `(rank, threads)` pair.
pub fn scaling_grid(
    v: &SparseMatrix,
    base: &NmfConfig,
    r_values: &[usize],
    thread_values: &[usize],
    iters: usize,
) -> Result<Vec<ScalingRow>> {
    if r_values.is_empty() || thread_values.is_empty() {
        return Err(NmfError::InvalidConfig("rank and thread lists must be nonempty".into()));
    }
    let mut rows = Vec::with_capacity(r_values.len() * thread_values.len());
    for &r in r_values {
        for &threads in thread_values {
            let cfg = NmfConfig {
                rank: r,
                n_workers: threads,
                max_outer_iters: iters,
                rel_obj_tol: 0.0,
                time_budget: None,
                ..base.clone()
            };
            let init = init_factors(v.n_rows(), v.n_cols(), r, v.mean(), cfg.seed);
            let res = factorize_from(v, &cfg, init)?;
            rows.push(ScalingRow {
                r,
                n_threads: threads,
                wall_seconds: res.elapsed_seconds(),
            });
        }
    }
    Ok(rows)
}

/// Scaling grid on synthetic data; writes `scaling.csv`.
pub fn scaling_report(
    spec: &SyntheticSpec,
    base: &NmfConfig,
    r_values: &[usize],
    thread_values: &[usize],
    iters: usize,
    out_dir: &Path,
) -> Result<Vec<ScalingRow>> {
    let v = synthesize(spec)?;
    let rows = scaling_grid(&v, base, r_values, thread_values, iters)?;
    ensure_dir(out_dir)?;
    let path = out_dir.join("scaling.csv");
    let file = fs::File::create(&path).map_err(|e| NmfError::io(&path, e))?;
    let mut wtr = csv::Writer::from_writer(file);
    for row in &rows {
        wtr.serialize(row)?;
    }
    wtr.flush().map_err(|e| NmfError::io(&path, e))?;
    Ok(rows)
}
