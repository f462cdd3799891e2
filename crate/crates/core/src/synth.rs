//! Synthetic sparse data from planted nonnegative factors.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson};

use crate::error::{NmfError, Result};
use crate::sparse::SparseMatrix;

/// Probability that a planted factor entry is nonzero.
const PLANTED_DENSITY: f64 = 0.05;
/// Uniform background rate relative to the mean planted rate.
const BACKGROUND: f64 = 0.05;
const COUNT_MEAN: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueModel {
    /// `1 + Poisson(λ)` integer counts.
    Count,
    /// Positive reals scattered log-normally around the planted product.
    Tfidf,
}

impl FromStr for ValueModel {
    type Err = NmfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "count" | "poisson" | "count-poisson" => Ok(ValueModel::Count),
            "tfidf" | "tfidf-like" => Ok(ValueModel::Tfidf),
            other => Err(NmfError::InvalidConfig(format!(
                "unknown value model '{other}' (expected count or tfidf)"
            ))),
        }
    }
}

impl fmt::Display for ValueModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueModel::Count => "count",
            ValueModel::Tfidf => "tfidf",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub m: usize,
    pub r_true: usize,
    /// Fraction of zero cells, in `[0, 1)`.
    pub sparsity: f64,
    pub value_model: ValueModel,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.sparsity) {
            return Err(NmfError::InfeasibleSparsity(self.sparsity));
        }
        if self.n == 0 || self.m == 0 || self.r_true == 0 {
            return Err(NmfError::InvalidConfig(
                "synthetic n, m and r must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn target_nnz(&self) -> usize {
        ((1.0 - self.sparsity) * self.n as f64 * self.m as f64).round() as usize
    }
}

/// Parses `n,m,r,sparsity,model`; the seed defaults to 0.
impl FromStr for SyntheticSpec {
    type Err = NmfError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 5 {
            return Err(NmfError::InvalidConfig(format!(
                "expected n,m,r,sparsity,model, got '{s}'"
            )));
        }
        let count = |p: &str, what: &str| {
            p.parse::<usize>()
                .map_err(|_| NmfError::InvalidConfig(format!("bad {what} '{p}'")))
        };
        let spec = SyntheticSpec {
            n: count(parts[0], "n")?,
            m: count(parts[1], "m")?,
            r_true: count(parts[2], "r")?,
            sparsity: parts[3]
                .parse()
                .map_err(|_| NmfError::InvalidConfig(format!("bad sparsity '{}'", parts[3])))?,
            value_model: parts[4].parse()?,
            seed: 0,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn planted(rng: &mut ChaCha8Rng, r: usize, items: usize) -> Vec<f64> {
    let mut values = vec![0.0; r * items];
    for col in values.chunks_exact_mut(r) {
        for v in col.iter_mut() {
            if rng.random::<f64>() < PLANTED_DENSITY {
                *v = rng.random_range(0.1..1.0);
            }
        }
        if col.iter().all(|&v| v == 0.0) {
            col[rng.random_range(0..r)] = rng.random_range(0.1..1.0);
        }
    }
    values
}

/// Heap entry ordered by its sampling key.
struct Keyed(f64, usize);

impl PartialEq for Keyed {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0).is_eq()
    }
}
impl Eq for Keyed {}
impl PartialOrd for Keyed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Keyed {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Draws a matrix with exactly `target_nnz()` stored entries. Positions are
/// sampled without replacement with probability proportional to the planted
/// product `W*ᵀF*` plus a small uniform background, so the support carries
/// the latent structure; values follow the same rate.
pub fn synthesize(spec: &SyntheticSpec) -> Result<SparseMatrix> {
    spec.validate()?;
    let (n, m, r) = (spec.n, spec.m, spec.r_true);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let w = planted(&mut rng, r, n);
    let f = planted(&mut rng, r, m);
    let rate = |i: usize, j: usize| -> f64 {
        let (wi, fj) = (&w[i * r..(i + 1) * r], &f[j * r..(j + 1) * r]);
        wi.iter().zip(fj).map(|(a, b)| a * b).sum()
    };

    let mut mean_rate = 0.0;
    for j in 0..m {
        for i in 0..n {
            mean_rate += rate(i, j);
        }
    }
    mean_rate /= (n * m) as f64;
    let background = BACKGROUND * mean_rate.max(f64::MIN_POSITIVE);

    // weighted sampling without replacement: keep the nnz largest ln(u)/w keys
    let nnz = spec.target_nnz();
    let mut heap: BinaryHeap<Reverse<Keyed>> = BinaryHeap::with_capacity(nnz + 1);
    if nnz > 0 {
        for j in 0..m {
            for i in 0..n {
                let weight = rate(i, j) + background;
                let u: f64 = 1.0 - rng.random::<f64>();
                let key = u.ln() / weight;
                if heap.len() < nnz {
                    heap.push(Reverse(Keyed(key, j * n + i)));
                } else if heap.peek().is_some_and(|Reverse(min)| key > min.0) {
                    heap.pop();
                    heap.push(Reverse(Keyed(key, j * n + i)));
                }
            }
        }
    }
    let mut cells: Vec<usize> = heap.into_iter().map(|Reverse(k)| k.1).collect();
    cells.sort_unstable();

    let chosen_mean = cells
        .iter()
        .map(|&c| rate(c % n, c / n) + background)
        .sum::<f64>()
        / cells.len().max(1) as f64;
    let target = match spec.value_model {
        ValueModel::Count => COUNT_MEAN,
        ValueModel::Tfidf => 1.0,
    };
    let scale = target / chosen_mean;
    let noise = LogNormal::new(0.0, 0.3).expect("valid log-normal");

    let triplets: Vec<(usize, usize, f64)> = cells
        .iter()
        .map(|&c| {
            let (i, j) = (c % n, c / n);
            let lambda = (rate(i, j) + background) * scale;
            let value = match spec.value_model {
                ValueModel::Count => {
                    1.0 + Poisson::new(lambda).expect("positive rate").sample(&mut rng)
                }
                ValueModel::Tfidf => lambda * noise.sample(&mut rng),
            };
            (i, j, value)
        })
        .collect();
    SparseMatrix::from_triplets(n, m, &triplets)
}
