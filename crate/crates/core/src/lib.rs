//! Nonnegative matrix factorization under the generalized KL divergence
//! for large sparse matrices.
//!
//! `V ≈ WᵀF` with `V` (`n × m`) stored in CSC form, `W` (`r × n`) and `F`
//! (`r × m`) dense. The solver alternates between the two factors; each
//! half-step splits into independent column subproblems that are solved by
//! randomized projected-Newton coordinate descent and run in parallel. A
//! multiplicative-update baseline shares the same driver for comparisons.
//!
//! Nothing of size `n·m` is ever allocated.

pub mod error;
pub mod experiment;
pub mod factor;
pub mod log;
pub mod memory;
pub mod mtx;
pub mod mu;
mod pool;
pub mod solver;
pub mod sparse;
pub mod subproblem;
pub mod synth;

pub use error::{NmfError, Result};
pub use factor::{row_sums, DenseFactor, FactorPair, RowPanel, RowSums};
pub use log::{ConvergenceLog, LogRecord};
pub use memory::MemoryReport;
pub use mtx::load_matrix_market;
pub use mu::{mu_factorize, mu_iterate, MuState};
pub use solver::{
    factorize, factorize_from, full_objective, init_factors, sweep, NmfConfig, NmfResult,
    Objective, RegConfig,
};
pub use sparse::{ColumnView, SparseMatrix};
pub use subproblem::{
    grad_and_hess, newton_step, solve_column, subproblem_objective, Penalty, ProductUpdate, Step,
    SubproblemWorkspace, Tolerances,
};
pub use synth::{synthesize, SyntheticSpec, ValueModel};
