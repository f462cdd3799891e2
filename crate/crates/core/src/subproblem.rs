//! Randomized projected-Newton coordinate descent for one column subproblem
//!
//! ```text
//! min_{x >= 0}  Σ_i ( -v_i log([Ax]_i + eps_div) + [Ax]_i ) + (α/2)‖x‖² + β‖x‖₁
//! ```
//!
//! `v` is one sparse column of the data, `A` is the transposed fixed factor
//! (`n × r`, held as a [`RowPanel`] so that column `A_k` is contiguous) and
//! `x` is the matching column of the factor being solved for.
//!
//! The product `Ax` is maintained incrementally in a caller-owned
//! [`SubproblemWorkspace`]. Because `Σ_i [Ax]_i = Σ_k sumA_k x_k`, the
//! gradient and curvature of a coordinate only touch the nonzeros of `v`.

use crate::error::{NmfError, Result};
use crate::factor::RowPanel;
use crate::sparse::ColumnView;

pub const DEFAULT_EPS_GRAD: f64 = 1e-10;
pub const DEFAULT_EPS_X: f64 = 0.1;
pub const DEFAULT_EPS_DIV: f64 = 1e-16;
pub const DEFAULT_INNER_ITER_CAP: usize = 32;

/// Backtracking halvings tried before a coordinate step is abandoned.
const MAX_HALVINGS: usize = 60;

/// Stopping and guard tolerances of the coordinate solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Gradient threshold of the inner-loop entry test; also the activity
    /// threshold on `x_k`.
    pub eps_grad: f64,
    /// Relative step size below which the inner loop of a coordinate stops.
    pub eps_x: f64,
    /// Added to every `[Ax]_i` inside logarithms and denominators.
    pub eps_div: f64,
    /// Newton steps allowed per coordinate visit.
    pub inner_iter_cap: usize,
    /// Passes over the coordinate order. A pass in which no coordinate
    /// moves ends the solve early. One pass is the plain alternating scheme.
    pub max_passes: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eps_grad: DEFAULT_EPS_GRAD,
            eps_x: DEFAULT_EPS_X,
            eps_div: DEFAULT_EPS_DIV,
            inner_iter_cap: DEFAULT_INNER_ITER_CAP,
            max_passes: 1,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.eps_grad) || !positive(self.eps_div) {
            return Err(NmfError::InvalidConfig(
                "eps_grad and eps_div must be positive".into(),
            ));
        }
        if !(self.eps_x > 0.0 && self.eps_x < 1.0) {
            return Err(NmfError::InvalidConfig("eps_x must lie in (0, 1)".into()));
        }
        if self.inner_iter_cap == 0 || self.max_passes == 0 {
            return Err(NmfError::InvalidConfig(
                "inner_iter_cap and max_passes must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// L2 weight `alpha` and L1 weight `beta` applied to one factor.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Penalty {
    pub alpha: f64,
    pub beta: f64,
}

impl Penalty {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Penalty { alpha, beta }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let sq: f64 = x.iter().map(|v| v * v).sum();
        let l1: f64 = x.iter().sum();
        0.5 * self.alpha * sq + self.beta * l1
    }
}

/// Counters accumulated across solves on one workspace.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub columns: usize,
    pub passes: usize,
    pub newton_steps: usize,
    pub backtracks: usize,
    pub cap_hits: usize,
    /// Coordinates with no curvature and a descent direction.
    pub degenerate: usize,
}

impl SolveStats {
    pub fn merge(&mut self, other: &SolveStats) {
        self.columns += other.columns;
        self.passes += other.passes;
        self.newton_steps += other.newton_steps;
        self.backtracks += other.backtracks;
        self.cap_hits += other.cap_hits;
        self.degenerate += other.degenerate;
    }
}

/// Which entries of `Ax` are kept up to date.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProductUpdate {
    /// Every entry: each step is one contiguous axpy over the full `A_k`.
    #[default]
    Dense,
    /// Only rows where `v` is nonzero, the only entries the gradient,
    /// curvature and step test read. Iterates are bitwise identical to
    /// `Dense`; other entries of the buffer are left stale.
    Support,
}

/// Per-worker scratch state: the maintained product `Ax`.
#[derive(Debug, Clone, Default)]
pub struct SubproblemWorkspace {
    ax: Vec<f64>,
    mode: ProductUpdate,
    pub stats: SolveStats,
}

impl SubproblemWorkspace {
    pub fn new(max_rows: usize) -> Self {
        Self::with_mode(max_rows, ProductUpdate::Dense)
    }

    pub fn with_mode(max_rows: usize, mode: ProductUpdate) -> Self {
        SubproblemWorkspace {
            ax: Vec::with_capacity(max_rows),
            mode,
            stats: SolveStats::default(),
        }
    }

    pub fn mode(&self) -> ProductUpdate {
        self.mode
    }

    /// The maintained `Ax` after the last solve. Under
    /// [`ProductUpdate::Support`] only rows in the support of `v` are current.
    pub fn ax(&self) -> &[f64] {
        &self.ax
    }

    pub fn capacity_bytes(&self) -> usize {
        self.ax.capacity() * std::mem::size_of::<f64>()
    }
}

/// Result of one projected Newton step on a single coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    Moved { new_x: f64, delta: f64 },
    /// No usable curvature; the coordinate is left where it is.
    Degenerate,
}

/// First and second partial derivatives of the subproblem objective with
/// respect to `x_k`. Cost is `O(nnz(v))`.
#[allow(clippy::too_many_arguments)]
#[inline]
pub fn grad_and_hess(
    k: usize,
    v: ColumnView<'_>,
    a: &RowPanel,
    ax: &[f64],
    sum_a: &[f64],
    x_k: f64,
    penalty: Penalty,
    eps_div: f64,
) -> (f64, f64) {
    let a_k = a.row(k);
    let mut ratio_sum = 0.0;
    let mut curvature = 0.0;
    for (i, vi) in v.iter() {
        let aik = a_k[i];
        if aik == 0.0 {
            continue;
        }
        let q = aik / (ax[i] + eps_div);
        ratio_sum += vi * q;
        curvature += vi * q * q;
    }
    let gradient = sum_a[k] - ratio_sum + penalty.alpha * x_k + penalty.beta;
    (gradient, curvature + penalty.alpha)
}

/// `x_k ← max(0, x_k − g/h)`.
///
/// Without curvature the objective is linear along the coordinate, so a
/// positive gradient sends `x_k` to the bound; otherwise the step is
/// [`Step::Degenerate`].
#[inline]
pub fn newton_step(x_k: f64, gradient: f64, hessian_diag: f64) -> Step {
    if hessian_diag > 0.0 {
        let new_x = (x_k - gradient / hessian_diag).max(0.0);
        Step::Moved {
            new_x,
            delta: new_x - x_k,
        }
    } else if gradient > 0.0 {
        Step::Moved {
            new_x: 0.0,
            delta: -x_k,
        }
    } else {
        Step::Degenerate
    }
}

/// Change of the objective when `x_k` moves by `delta`, evaluated on the
/// nonzeros of `v` only.
#[allow(clippy::too_many_arguments)]
#[inline]
fn objective_change(
    a_k: &[f64],
    v: ColumnView<'_>,
    ax: &[f64],
    sum_a_k: f64,
    x_k: f64,
    delta: f64,
    penalty: Penalty,
    eps_div: f64,
) -> f64 {
    let mut log_gain = 0.0;
    for (i, vi) in v.iter() {
        let aik = a_k[i];
        if aik == 0.0 {
            continue;
        }
        let ratio = delta * aik / (ax[i] + eps_div);
        // rounding can leave ax[i] a hair below x_k·a_ik; emptying the row
        // costs -v·log(eps_div) and is never a descent
        if ratio <= -1.0 {
            return f64::INFINITY;
        }
        log_gain += vi * ratio.ln_1p();
    }
    let new_x = x_k + delta;
    delta * (sum_a_k + penalty.beta) + 0.5 * penalty.alpha * (new_x * new_x - x_k * x_k) - log_gain
}

#[inline]
fn wants_update(gradient: f64, x_k: f64, eps: f64) -> bool {
    gradient < -eps || (gradient.abs() > eps && x_k > eps)
}

fn check_dims(v: ColumnView<'_>, a: &RowPanel, sum_a: &[f64], x: &[f64]) -> Result<()> {
    let r = a.n_latent();
    if x.len() != r || sum_a.len() != r {
        return Err(NmfError::DimensionMismatch(format!(
            "x has {} and sumA has {} entries, A has {r} columns",
            x.len(),
            sum_a.len()
        )));
    }
    if let Some(&last) = v.indices.last() {
        if last >= a.n_items() {
            return Err(NmfError::DimensionMismatch(format!(
                "v has row {last} but A has {} rows",
                a.n_items()
            )));
        }
    }
    Ok(())
}

/// Recomputes `ax = A x`, skipping zero coordinates.
pub(crate) fn fill_product(a: &RowPanel, x: &[f64], ax: &mut Vec<f64>) {
    ax.clear();
    ax.resize(a.n_items(), 0.0);
    for (k, &xk) in x.iter().enumerate() {
        if xk != 0.0 {
            axpy(xk, a.row(k), ax);
        }
    }
}

/// Computes `ax[i]` only for rows `i` in `support`, in the same summation
/// order as [`fill_product`].
fn fill_product_on(a: &RowPanel, x: &[f64], support: &[usize], ax: &mut Vec<f64>) {
    if ax.len() != a.n_items() {
        ax.clear();
        ax.resize(a.n_items(), 0.0);
    }
    for &i in support {
        let mut acc = 0.0;
        for (k, &xk) in x.iter().enumerate() {
            if xk != 0.0 {
                acc += xk * a.row(k)[i];
            }
        }
        ax[i] = acc;
    }
}

#[inline]
fn axpy_on(alpha: f64, x: &[f64], y: &mut [f64], support: &[usize]) {
    for &i in support {
        y[i] += alpha * x[i];
    }
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Solves one column subproblem in place, starting from the current `x`.
///
/// Coordinates are visited in the order `ids`. Each visit repeats projected
/// Newton steps while the coordinate is not stationary, stopping once a step
/// is smaller than `eps_x` times the previous value or `inner_iter_cap` is
/// reached. A step that would raise the objective is halved until it does
/// not. `Ax` is updated after every step, over all of `A_k` or only over the
/// support of `v` depending on the workspace's [`ProductUpdate`].
#[allow(clippy::too_many_arguments)]
pub fn solve_column(
    v: ColumnView<'_>,
    a: &RowPanel,
    sum_a: &[f64],
    x: &mut [f64],
    penalty: Penalty,
    ids: &[usize],
    tol: &Tolerances,
    ws: &mut SubproblemWorkspace,
) -> Result<()> {
    check_dims(v, a, sum_a, x)?;
    let r = x.len();
    if ids.len() != r || ids.iter().any(|&k| k >= r) {
        return Err(NmfError::DimensionMismatch(format!(
            "coordinate order must be a permutation of 0..{r}"
        )));
    }
    let dense = ws.mode == ProductUpdate::Dense;
    if dense {
        fill_product(a, x, &mut ws.ax);
    } else {
        fill_product_on(a, x, v.indices, &mut ws.ax);
    }
    let eps = tol.eps_grad;
    let stats = &mut ws.stats;
    let ax = &mut ws.ax;
    stats.columns += 1;

    for _ in 0..tol.max_passes {
        stats.passes += 1;
        let mut moved = false;
        for &k in ids {
            let a_k = a.row(k);
            let (mut g, mut h) = grad_and_hess(k, v, a, ax, sum_a, x[k], penalty, tol.eps_div);
            let mut steps = 0;
            while wants_update(g, x[k], eps) {
                let mut delta = match newton_step(x[k], g, h) {
                    Step::Moved { delta, .. } => delta,
                    Step::Degenerate => {
                        if g < -eps {
                            stats.degenerate += 1;
                        }
                        break;
                    }
                };
                let xs = x[k];
                let mut halvings = 0;
                // a NaN change counts as an increase
                let rises = |d: f64| {
                    let change = objective_change(a_k, v, ax, sum_a[k], xs, d, penalty, tol.eps_div);
                    change > 0.0 || change.is_nan()
                };
                while delta != 0.0 && rises(delta) {
                    halvings += 1;
                    delta = if halvings > MAX_HALVINGS { 0.0 } else { 0.5 * delta };
                }
                stats.backtracks += halvings;
                if delta == 0.0 {
                    break;
                }
                stats.newton_steps += 1;
                if dense {
                    axpy(delta, a_k, ax);
                } else {
                    axpy_on(delta, a_k, ax, v.indices);
                }
                x[k] = if delta == -xs { 0.0 } else { (xs + delta).max(0.0) };
                moved = true;
                if delta.abs() < tol.eps_x * xs {
                    break;
                }
                steps += 1;
                if steps >= tol.inner_iter_cap {
                    stats.cap_hits += 1;
                    break;
                }
                (g, h) = grad_and_hess(k, v, a, ax, sum_a, x[k], penalty, tol.eps_div);
            }
        }
        if !moved {
            break;
        }
    }
    Ok(())
}

/// Objective of the column subproblem including the constant `v log v − v`
/// terms, so that it is zero when `Ax = v` and the penalty vanishes.
pub fn subproblem_objective(
    v: ColumnView<'_>,
    a: &RowPanel,
    x: &[f64],
    penalty: Penalty,
    eps_div: f64,
) -> f64 {
    let mut ax = Vec::new();
    fill_product(a, x, &mut ax);
    objective_from_product(v, &ax, penalty, x, eps_div)
}

pub(crate) fn objective_from_product(
    v: ColumnView<'_>,
    ax: &[f64],
    penalty: Penalty,
    x: &[f64],
    eps_div: f64,
) -> f64 {
    let mut total: f64 = ax.iter().sum();
    for (i, vi) in v.iter() {
        total += vi * (vi / (ax[i] + eps_div)).ln() - vi;
    }
    total + penalty.value(x)
}

/// Projected-gradient residual per coordinate, summed:
/// `|g_k|` where `x_k > 0`, `max(0, −g_k)` at the bound.
pub fn kkt_residual(
    v: ColumnView<'_>,
    a: &RowPanel,
    sum_a: &[f64],
    x: &[f64],
    penalty: Penalty,
    eps_div: f64,
) -> f64 {
    let mut ax = Vec::new();
    fill_product(a, x, &mut ax);
    (0..x.len())
        .map(|k| {
            let (g, _) = grad_and_hess(k, v, a, &ax, sum_a, x[k], penalty, eps_div);
            if x[k] > 0.0 {
                g.abs()
            } else {
                (-g).max(0.0)
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::{row_sums, DenseFactor};
    use crate::sparse::SparseMatrix;

    /// Builds `A` (n × r) from its rows and returns the panel plus `sumA`.
    fn operand(a_rows: &[Vec<f64>]) -> (RowPanel, Vec<f64>) {
        // the fixed factor is Aᵀ: r × n with column i equal to row i of A
        let n = a_rows.len();
        let r = a_rows[0].len();
        let mut vals = Vec::with_capacity(n * r);
        for row in a_rows {
            vals.extend_from_slice(row);
        }
        let fixed = DenseFactor::from_column_major(r, n, vals).unwrap();
        (fixed.to_panel(), row_sums(&fixed).0)
    }

    fn dense_col(v: &[f64]) -> SparseMatrix {
        let trip: Vec<_> = v.iter().enumerate().map(|(i, &x)| (i, 0, x)).collect();
        SparseMatrix::from_triplets(v.len(), 1, &trip).unwrap()
    }

    #[test]
    fn grad_hess_worked_example() {
        let (a, sum_a) = operand(&[vec![1.0, 0.0], vec![1.0, 1.0]]);
        let vm = dense_col(&[1.0, 1.0]);
        let v = vm.column(0).unwrap();
        let x = [1.0, 1.0];
        let mut ax = Vec::new();
        fill_product(&a, &x, &mut ax);
        let p = Penalty::default();
        let (g0, h0) = grad_and_hess(0, v, &a, &ax, &sum_a, x[0], p, 0.0);
        let (g1, h1) = grad_and_hess(1, v, &a, &ax, &sum_a, x[1], p, 0.0);
        assert!((g0 - 0.5).abs() < 1e-15 && (h0 - 1.25).abs() < 1e-15);
        assert!((g1 - 0.5).abs() < 1e-15 && (h1 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn grad_hess_empty_v_and_penalty() {
        let (a, sum_a) = operand(&[vec![2.0, 1.0], vec![3.0, 0.5]]);
        let vm = SparseMatrix::from_triplets(2, 1, &[]).unwrap();
        let v = vm.column(0).unwrap();
        let ax = [0.0, 0.0];
        let (g, h) = grad_and_hess(0, v, &a, &ax, &sum_a, 1.0, Penalty::default(), 1e-16);
        assert_eq!((g, h), (sum_a[0], 0.0));
        let (g, h) = grad_and_hess(0, v, &a, &ax, &sum_a, 1.0, Penalty::new(2.0, 3.0), 1e-16);
        assert_eq!((g, h), (sum_a[0] + 2.0 + 3.0, 2.0));
    }

    #[test]
    fn newton_step_examples() {
        match newton_step(1.0, 0.5, 1.25) {
            Step::Moved { new_x, delta } => {
                assert!((new_x - 0.6).abs() < 1e-15);
                assert!((delta + 0.4).abs() < 1e-15);
            }
            s => panic!("{s:?}"),
        }
        assert_eq!(
            newton_step(0.7, 0.0, 2.0),
            Step::Moved {
                new_x: 0.7,
                delta: 0.0
            }
        );
        match newton_step(0.1, 10.0, 1.0) {
            Step::Moved { new_x, delta } => {
                assert_eq!(new_x, 0.0);
                assert!((delta + 0.1).abs() < 1e-15);
            }
            s => panic!("{s:?}"),
        }
        assert_eq!(
            newton_step(0.5, 1.0, 0.0),
            Step::Moved {
                new_x: 0.0,
                delta: -0.5
            }
        );
        assert_eq!(newton_step(0.5, -1.0, 0.0), Step::Degenerate);
    }

    #[test]
    fn separable_identity_problem() {
        let (a, sum_a) = operand(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let vm = dense_col(&[2.0, 3.0]);
        let mut x = [1.0, 1.0];
        let tol = Tolerances {
            max_passes: 100,
            ..Tolerances::default()
        };
        let mut ws = SubproblemWorkspace::new(2);
        solve_column(vm.column(0).unwrap(), &a, &sum_a, &mut x, Penalty::default(), &[1, 0], &tol, &mut ws)
            .unwrap();
        assert!((x[0] - 2.0).abs() < 1e-9, "{x:?}");
        assert!((x[1] - 3.0).abs() < 1e-9, "{x:?}");
    }

    #[test]
    fn zero_data_drives_to_bound() {
        let (a, sum_a) = operand(&[vec![1.0, 0.3], vec![0.2, 1.0], vec![0.5, 0.5]]);
        let vm = SparseMatrix::from_triplets(3, 1, &[]).unwrap();
        let mut x = [4.0, 0.25];
        let mut ws = SubproblemWorkspace::new(3);
        solve_column(vm.column(0).unwrap(), &a, &sum_a, &mut x, Penalty::default(), &[0, 1], &Tolerances::default(), &mut ws)
            .unwrap();
        assert_eq!(x, [0.0, 0.0]);
        assert!(ws.ax().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn overshooting_newton_step_is_backtracked() {
        // -log t + t from t = 3: the raw Newton step lands on the bound
        let (a, sum_a) = operand(&[vec![1.0]]);
        let vm = dense_col(&[1.0]);
        let v = vm.column(0).unwrap();
        let mut x = [3.0];
        let before = subproblem_objective(v, &a, &x, Penalty::default(), DEFAULT_EPS_DIV);
        let mut ws = SubproblemWorkspace::new(1);
        solve_column(v, &a, &sum_a, &mut x, Penalty::default(), &[0], &Tolerances::default(), &mut ws)
            .unwrap();
        let after = subproblem_objective(v, &a, &x, Penalty::default(), DEFAULT_EPS_DIV);
        assert!(after <= before);
        assert!(ws.stats.backtracks > 0);
        assert!((x[0] - 1.0).abs() < 0.05, "{x:?}");
    }

    #[test]
    fn objective_examples() {
        let (a, _) = operand(&[vec![1.0]]);
        let vm = dense_col(&[1.0]);
        let e = std::f64::consts::E;
        let val = subproblem_objective(vm.column(0).unwrap(), &a, &[e], Penalty::default(), 0.0);
        assert!((val - (e - 2.0)).abs() < 1e-15);

        let (a, _) = operand(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let vm = dense_col(&[1.0, 1.0]);
        let v = vm.column(0).unwrap();
        let base = subproblem_objective(v, &a, &[1.0, 1.0], Penalty::default(), DEFAULT_EPS_DIV);
        assert!(base.abs() <= 1e-9);
        let l2 = subproblem_objective(v, &a, &[1.0, 1.0], Penalty::new(2.0, 0.0), DEFAULT_EPS_DIV);
        let l1 = subproblem_objective(v, &a, &[1.0, 1.0], Penalty::new(0.0, 3.0), DEFAULT_EPS_DIV);
        assert!((l2 - base - 2.0).abs() < 1e-12);
        assert!((l1 - base - 6.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_reported() {
        let (a, sum_a) = operand(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let vm = dense_col(&[1.0, 1.0, 1.0]);
        let mut ws = SubproblemWorkspace::new(3);
        let mut x = [1.0, 1.0];
        let err = solve_column(vm.column(0).unwrap(), &a, &sum_a, &mut x, Penalty::default(), &[0, 1], &Tolerances::default(), &mut ws);
        assert!(matches!(err, Err(NmfError::DimensionMismatch(_))));
        let vm = dense_col(&[1.0, 1.0]);
        let mut x3 = [1.0, 1.0, 1.0];
        let err = solve_column(vm.column(0).unwrap(), &a, &sum_a, &mut x3, Penalty::default(), &[0, 1, 2], &Tolerances::default(), &mut ws);
        assert!(matches!(err, Err(NmfError::DimensionMismatch(_))));
        let err = solve_column(vm.column(0).unwrap(), &a, &sum_a, &mut x, Penalty::default(), &[0, 2], &Tolerances::default(), &mut ws);
        assert!(matches!(err, Err(NmfError::DimensionMismatch(_))));
    }

    #[test]
    fn tolerance_validation() {
        assert!(Tolerances::default().validate().is_ok());
        let bad = Tolerances {
            eps_x: 1.0,
            ..Tolerances::default()
        };
        assert!(bad.validate().is_err());
        let bad = Tolerances {
            eps_grad: 0.0,
            ..Tolerances::default()
        };
        assert!(bad.validate().is_err());
    }
}
