//! Timing sweep comparing the exact projection with the iterative baseline
//! on batches of random problems.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::sparsity::{k_from_alpha, projection_hoyer, sparse_opt};

/// Sweep protocol: for every (dimension, sparsity) pair, `trials` random
/// batches of `batch_cols` vectors with entries uniform in [0, 1), each
/// batch projected by both algorithms.
#[derive(Debug, Clone)]
pub struct BenchParams {
    pub dims: Vec<usize>,
    pub batch_cols: usize,
    pub sparsities: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

/// Mean wall-clock seconds per batch for one algorithm at one grid point.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub dim: usize,
    pub sparsity: f64,
    pub algorithm: &'static str,
    pub mean_seconds: f64,
    /// Baseline non-convergence count across all trials (0 for the exact
    /// projection); reported, not fatal.
    pub failures: usize,
}

pub const ALGORITHM_SPARSE_OPT: &str = "sparse_opt";
pub const ALGORITHM_HOYER: &str = "projection_hoyer";

/// Runs the sweep. Both algorithms see identical inputs, so objective
/// comparisons between the paired rows are meaningful.
pub fn run_projection_bench(params: &BenchParams) -> Result<Vec<BenchRow>> {
    if params.dims.is_empty() || params.sparsities.is_empty() {
        return Err(Error::Range("empty dimension or sparsity list".into()));
    }
    if params.batch_cols == 0 || params.trials == 0 {
        return Err(Error::Range("batch_cols and trials must be positive".into()));
    }
    for &dim in &params.dims {
        if dim == 0 {
            return Err(Error::Range("dimensions must be positive".into()));
        }
    }
    for &alpha in &params.sparsities {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Range(format!("sparsity {alpha} outside [0, 1]")));
        }
    }

    let mut rng = SeededRng::new(params.seed);
    let mut rows = Vec::with_capacity(params.dims.len() * params.sparsities.len() * 2);
    let mut batch: Vec<Vec<f64>> = Vec::new();

    for &dim in &params.dims {
        for &alpha in &params.sparsities {
            // A 1-dimensional problem admits only k = 1.
            let k = if dim == 1 { 1.0 } else { k_from_alpha(alpha, dim)? };

            let mut exact_seconds = 0.0;
            let mut hoyer_seconds = 0.0;
            let mut hoyer_failures = 0usize;

            // One untimed batch warms caches and the allocator; every trial
            // after it counts towards the mean. The measurement order
            // alternates so neither algorithm always pays the cold-cache
            // cost of touching the fresh batch first.
            for trial in 0..=params.trials {
                batch.clear();
                for _ in 0..params.batch_cols {
                    batch.push((0..dim).map(|_| rng.uniform()).collect());
                }

                let mut exact = 0.0;
                let mut hoyer = 0.0;
                for leg in 0..2 {
                    let exact_leg = (trial % 2 == 0) == (leg == 0);
                    let start = Instant::now();
                    if exact_leg {
                        for b in &batch {
                            let _ = sparse_opt(b, k)?;
                        }
                        exact = start.elapsed().as_secs_f64();
                    } else {
                        for b in &batch {
                            if projection_hoyer(b, k).is_err() {
                                hoyer_failures += 1;
                            }
                        }
                        hoyer = start.elapsed().as_secs_f64();
                    }
                }

                if trial > 0 {
                    exact_seconds += exact;
                    hoyer_seconds += hoyer;
                }
            }

            let timed_trials = params.trials as f64;
            rows.push(BenchRow {
                dim,
                sparsity: alpha,
                algorithm: ALGORITHM_SPARSE_OPT,
                mean_seconds: exact_seconds / timed_trials,
                failures: 0,
            });
            rows.push(BenchRow {
                dim,
                sparsity: alpha,
                algorithm: ALGORITHM_HOYER,
                mean_seconds: hoyer_seconds / timed_trials,
                failures: hoyer_failures,
            });
        }
    }
    Ok(rows)
}

/// CSV serialization with the `dim,sparsity,algorithm,mean_seconds` header.
pub fn bench_to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("dim,sparsity,algorithm,mean_seconds\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{:.9e}\n",
            row.dim, row.sparsity, row.algorithm, row.mean_seconds
        ));
    }
    out
}
