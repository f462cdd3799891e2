//! Fixtures shared by the benchmarks.

use srcd::{init_factors, synthesize, FactorPair, SparseMatrix, SyntheticSpec, ValueModel};

/// Synthetic count matrix plus matching random factors of rank `r`.
pub fn fixture(n: usize, m: usize, r: usize, sparsity: f64) -> (SparseMatrix, FactorPair) {
    let v = synthesize(&SyntheticSpec {
        n,
        m,
        r_true: r,
        sparsity,
        value_model: ValueModel::Count,
        seed: 1,
    })
    .expect("valid spec");
    let factors = init_factors(n, m, r, v.mean(), 1);
    (v, factors)
}
