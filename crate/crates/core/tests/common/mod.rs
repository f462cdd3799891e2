//! Helpers shared by the integration tests. The oracles here recompute
//! everything from the formulas with plain loops and never call into the
//! solver internals.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srcd::{row_sums, DenseFactor, FactorPair, Penalty, RowPanel, SparseMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One column subproblem: `A` is held as the `r × n` fixed factor whose
/// column `i` is row `i` of `A`.
#[derive(Debug, Clone)]
pub struct Instance {
    pub fixed: DenseFactor,
    pub v: SparseMatrix,
    pub x0: Vec<f64>,
    pub penalty: Penalty,
}

impl Instance {
    pub fn new(a_rows: &[Vec<f64>], v: &[f64], x0: Vec<f64>, penalty: Penalty) -> Self {
        let n = a_rows.len();
        let r = x0.len();
        let values: Vec<f64> = a_rows.iter().flatten().copied().collect();
        let fixed = DenseFactor::from_column_major(r, n, values).unwrap();
        let trip: Vec<_> = v
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0.0)
            .map(|(i, &x)| (i, 0, x))
            .collect();
        let v = SparseMatrix::from_triplets(n, 1, &trip).unwrap();
        Instance {
            fixed,
            v,
            x0,
            penalty,
        }
    }

    pub fn n(&self) -> usize {
        self.fixed.n_items()
    }

    pub fn r(&self) -> usize {
        self.fixed.n_latent()
    }

    pub fn a(&self, i: usize, k: usize) -> f64 {
        self.fixed.get(k, i)
    }

    pub fn panel(&self) -> RowPanel {
        self.fixed.to_panel()
    }

    pub fn sums(&self) -> Vec<f64> {
        row_sums(&self.fixed).0
    }

    pub fn dense_v(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for (i, x) in self.v.column(0).unwrap().iter() {
            out[i] = x;
        }
        out
    }

    pub fn product(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|i| (0..self.r()).map(|k| self.a(i, k) * x[k]).sum())
            .collect()
    }

    /// `Σ_i (ax_i − v_i log(ax_i + eps)) + penalty`, without the constants.
    pub fn reduced_objective(&self, x: &[f64], eps_div: f64) -> f64 {
        let v = self.dense_v();
        let ax = self.product(x);
        let mut total = 0.0;
        for i in 0..self.n() {
            total += ax[i];
            if v[i] != 0.0 {
                total -= v[i] * (ax[i] + eps_div).ln();
            }
        }
        total + self.penalty_value(x)
    }

    /// Full KL form with the `v log v − v` constants.
    pub fn objective(&self, x: &[f64], eps_div: f64) -> f64 {
        let v = self.dense_v();
        let constant: f64 = v
            .iter()
            .filter(|&&vi| vi != 0.0)
            .map(|&vi| vi * vi.ln() - vi)
            .sum();
        self.reduced_objective(x, eps_div) + constant
    }

    pub fn penalty_value(&self, x: &[f64]) -> f64 {
        let sq: f64 = x.iter().map(|t| t * t).sum();
        let l1: f64 = x.iter().sum();
        0.5 * self.penalty.alpha * sq + self.penalty.beta * l1
    }

    pub fn gradient(&self, x: &[f64], eps_div: f64) -> Vec<f64> {
        let v = self.dense_v();
        let ax = self.product(x);
        (0..self.r())
            .map(|k| {
                let mut g = 0.0;
                for i in 0..self.n() {
                    g += self.a(i, k) * (1.0 - v[i] / (ax[i] + eps_div));
                }
                g + self.penalty.alpha * x[k] + self.penalty.beta
            })
            .collect()
    }

    pub fn curvature(&self, x: &[f64], eps_div: f64) -> Vec<f64> {
        let v = self.dense_v();
        let ax = self.product(x);
        (0..self.r())
            .map(|k| {
                let mut h = 0.0;
                for i in 0..self.n() {
                    let q = self.a(i, k) / (ax[i] + eps_div);
                    h += v[i] * q * q;
                }
                h + self.penalty.alpha
            })
            .collect()
    }
}

/// Projected gradient descent with Armijo backtracking, run until the
/// iterate stops moving or `max_iters` is exhausted.
pub fn projected_gradient_oracle(inst: &Instance, max_iters: usize, eps_div: f64) -> Vec<f64> {
    let mut x: Vec<f64> = inst.x0.iter().map(|&t| t.max(1e-3)).collect();
    let mut fx = inst.objective(&x, eps_div);
    let mut step = 1.0;
    for _ in 0..max_iters {
        let g = inst.gradient(&x, eps_div);
        step *= 2.0;
        let mut accepted = None;
        for _ in 0..200 {
            let cand: Vec<f64> = x
                .iter()
                .zip(&g)
                .map(|(&xi, &gi)| (xi - step * gi).max(0.0))
                .collect();
            let fc = inst.objective(&cand, eps_div);
            let lin: f64 = cand
                .iter()
                .zip(&x)
                .zip(&g)
                .map(|((&c, &xi), &gi)| gi * (c - xi) + (c - xi).powi(2) / (2.0 * step))
                .sum();
            if fc.is_finite() && fc <= fx + lin {
                accepted = Some((cand, fc));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, fc)) = accepted else { break };
        let moved = cand
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x = cand;
        fx = fc;
        if moved < 1e-15 {
            break;
        }
    }
    x
}

/// Random subproblem with entries uniform on the given ranges.
pub fn random_instance(
    rng: &mut ChaCha8Rng,
    n: usize,
    r: usize,
    v_density: f64,
    penalty: Penalty,
) -> Instance {
    let a_rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..r)
                .map(|_| {
                    if rng.random::<f64>() < 0.2 {
                        0.0
                    } else {
                        rng.random_range(0.05..1.5)
                    }
                })
                .collect()
        })
        .collect();
    let v: Vec<f64> = (0..n)
        .map(|i| {
            let reachable = a_rows[i].iter().any(|&a| a > 0.0);
            if reachable && rng.random::<f64>() < v_density {
                rng.random_range(0.1..5.0)
            } else {
                0.0
            }
        })
        .collect();
    let x0 = (0..r).map(|_| rng.random_range(0.0..2.0)).collect();
    Instance::new(&a_rows, &v, x0, penalty)
}

/// `V = w fᵀ` with a share of exact zeros in both vectors.
pub fn planted_rank_one(rng: &mut ChaCha8Rng, n: usize, m: usize) -> (SparseMatrix, FactorPair) {
    let mut draw = |len: usize| -> Vec<f64> {
        (0..len)
            .map(|_| {
                if rng.random::<f64>() < 0.3 {
                    0.0
                } else {
                    rng.random_range(0.5..2.0)
                }
            })
            .collect()
    };
    let w = draw(n);
    let f = draw(m);
    let mut trip = Vec::new();
    for j in 0..m {
        for i in 0..n {
            let x = w[i] * f[j];
            if x > 0.0 {
                trip.push((i, j, x));
            }
        }
    }
    let v = SparseMatrix::from_triplets(n, m, &trip).unwrap();
    let fp = FactorPair {
        w: DenseFactor::from_column_major(1, n, w).unwrap(),
        f: DenseFactor::from_column_major(1, m, f).unwrap(),
    };
    (v, fp)
}

/// Random sparse matrix with positive entries at roughly `density`.
pub fn random_sparse(rng: &mut ChaCha8Rng, n: usize, m: usize, density: f64) -> SparseMatrix {
    let mut trip = Vec::new();
    for j in 0..m {
        for i in 0..n {
            if rng.random::<f64>() < density {
                trip.push((i, j, rng.random_range(0.5..4.0f64).round()));
            }
        }
    }
    if trip.is_empty() {
        trip.push((0, 0, 1.0));
    }
    SparseMatrix::from_triplets(n, m, &trip).unwrap()
}

/// `Σ_ij (V_ij log(V_ij / X_ij) − V_ij + X_ij)` over every cell.
pub fn brute_force_kl(v: &SparseMatrix, fp: &FactorPair, eps_div: f64) -> f64 {
    let mut dense = vec![0.0; v.n_rows() * v.n_cols()];
    for (i, j, x) in v.triplets() {
        dense[j * v.n_rows() + i] = x;
    }
    let mut total = 0.0;
    for j in 0..v.n_cols() {
        for i in 0..v.n_rows() {
            let x: f64 = (0..fp.rank()).map(|k| fp.w.get(k, i) * fp.f.get(k, j)).sum();
            let vij = dense[j * v.n_rows() + i];
            total += x;
            if vij != 0.0 {
                total += vij * (vij / (x + eps_div)).ln() - vij;
            }
        }
    }
    total
}

pub fn is_nonincreasing(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + slack)
}
