//! Independent brute-force references for the fast paths.
//!
//! These deliberately share no code with the implementations they certify
//! beyond the domain types: the projection oracle enumerates every support
//! set instead of scanning sorted transition points, and the pass oracle
//! rebuilds its gradient state from scratch before every column instead of
//! updating it incrementally. Exponential and quadratic costs are fine
//! here; these run on small instances inside the test surface only.

use snmf::error::{Error, Result};
use snmf::matrix::DenseMatrix;
use snmf::sparsity::{ConstraintKind, ProjectionSolution, SparsityConstraint};

/// Largest dimension the support enumeration accepts (2^m subsets).
pub const MAX_ORACLE_DIM: usize = 20;

/// Outcome of one fast-vs-oracle comparison.
#[derive(Debug, Clone)]
pub struct OracleReport {
    /// Human-readable instance descriptor.
    pub instance: String,
    pub fast_objective: f64,
    pub oracle_objective: f64,
    /// Worst violation of y >= 0, |‖y‖1 - k| and |‖y‖2 - 1| by the fast
    /// solution.
    pub max_feasibility_violation: f64,
    pub pass: bool,
}

fn l1(y: &[f64]) -> f64 {
    y.iter().map(|v| v.abs()).sum()
}

fn l2(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn feasibility_violation(y: &[f64], k: f64) -> f64 {
    let neg = y.iter().fold(0.0f64, |acc, &v| acc.max(-v));
    neg.max((l1(y) - k).abs()).max((l2(y) - 1.0).abs())
}

/// Exact solution of `max b'y, y >= 0, ||y||_1 = k, ||y||_2 = 1` by
/// enumerating every admissible support set and solving the two-constraint
/// stationarity system on it in closed form.
pub fn sparse_opt_oracle(b: &[f64], k: f64) -> Result<ProjectionSolution> {
    let m = b.len();
    if m == 0 {
        return Err(Error::Dimension("oracle input is empty".into()));
    }
    if m > MAX_ORACLE_DIM {
        return Err(Error::Range(format!(
            "support enumeration is limited to {MAX_ORACLE_DIM} dimensions, got {m}"
        )));
    }
    let root_m = (m as f64).sqrt();
    if !k.is_finite() || k < 1.0 - 1e-9 || k > root_m + 1e-9 {
        return Err(Error::Range(format!("L1 target {k} outside [1, sqrt({m})]")));
    }
    let k = k.clamp(1.0, root_m);
    let ksq = k * k;
    let p_min = ((ksq - 1e-9).ceil() as usize).clamp(1, m);

    let mut best: Option<(f64, Vec<f64>, usize, f64, f64)> = None;
    let mut support = Vec::with_capacity(m);
    for mask in 1u32..(1u32 << m) {
        let p = mask.count_ones() as usize;
        if p < p_min {
            continue;
        }
        support.clear();
        for i in 0..m {
            if mask & (1 << i) != 0 {
                support.push(i);
            }
        }
        if let Some((y, lambda, mu)) = solve_on_support(b, &support, k) {
            let objective: f64 = support.iter().map(|&i| b[i] * y[i]).sum();
            let better = best.as_ref().is_none_or(|(obj, ..)| objective > *obj);
            if better {
                best = Some((objective, y, p, lambda, mu));
            }
        }
    }

    let (objective, y, support_size, lambda, mu) =
        best.expect("at least the uniform support is always feasible");
    debug_assert!(feasibility_violation(&y, k) <= 1e-10);
    Ok(ProjectionSolution {
        y,
        support_size,
        lambda,
        mu,
        objective,
    })
}

/// Stationary (or degenerate) feasible point with the given support, if one
/// exists. Returns the full-length vector.
fn solve_on_support(b: &[f64], support: &[usize], k: f64) -> Option<(Vec<f64>, f64, f64)> {
    let m = b.len();
    let p = support.len();
    let pf = p as f64;
    let ksq = k * k;
    let s1: f64 = support.iter().map(|&i| b[i]).sum();

    let mut y = vec![0.0; m];
    if pf - ksq <= 1e-12 {
        // Support of size k^2: Cauchy-Schwarz forces the uniform point.
        let v = 1.0 / pf.sqrt();
        for &i in support {
            y[i] = v;
        }
        return Some((y, 0.0, -s1 / pf));
    }
    // Centered sum of squares in units of the largest magnitude on the
    // support: p*s2 - s1^2 cancels catastrophically for nearly equal
    // entries, and unscaled squared deviations can underflow outright.
    let mean = s1 / pf;
    let scale = support
        .iter()
        .map(|&i| b[i].abs())
        .fold(0.0f64, f64::max);
    let centered_scaled: f64 = if scale > 0.0 {
        support
            .iter()
            .map(|&i| {
                let d = (b[i] - mean) / scale;
                d * d
            })
            .sum()
    } else {
        0.0
    };
    if centered_scaled <= pf * 1e-13 {
        // Entries equal up to the precision the deviations retain: every
        // feasible point ties up to inherent rounding; produce a
        // deterministic two-level one.
        let q = (ksq.floor() as usize).clamp(1, p - 1);
        let (qf, rf) = (q as f64, (p - q) as f64);
        let excess = pf - ksq;
        let u = (k + (rf * excess / qf).sqrt()) / pf;
        let v = ((k - (qf * excess / rf).sqrt()) / pf).max(0.0);
        for (slot, &i) in support.iter().enumerate() {
            y[i] = if slot < q { u } else { v };
        }
        return Some((y, 0.0, -mean));
    }
    let lambda = -scale * (pf * centered_scaled / (pf - ksq)).sqrt();
    let base = k / pf;
    let inv_sqrt_ratio = 1.0 / (pf * centered_scaled / (pf - ksq)).sqrt();
    for &i in support {
        let v = base + ((b[i] - mean) / scale) * inv_sqrt_ratio;
        if v < 0.0 {
            // Boundary solutions live on smaller supports, which the caller
            // also enumerates.
            return None;
        }
        y[i] = v;
    }
    Some((y, lambda, -mean - base * lambda))
}

/// Runs both the fast projection and the oracle on one instance.
pub fn check_sparse_opt(b: &[f64], k: f64) -> Result<OracleReport> {
    let fast = snmf::sparsity::sparse_opt(b, k)?;
    let oracle = sparse_opt_oracle(b, k)?;
    let violation = feasibility_violation(&fast.y, k);
    let diff = (fast.objective - oracle.objective).abs();
    Ok(OracleReport {
        instance: format!("m={} k={k:.6}", b.len()),
        fast_objective: fast.objective,
        oracle_objective: oracle.objective,
        max_feasibility_violation: violation,
        pass: diff <= 1e-8 && violation <= 1e-8,
    })
}

// Independent copies of the small formulas the pass oracle needs.

fn oracle_measure(y: &[f64]) -> f64 {
    let d = y.len() as f64;
    (d.sqrt() - l1(y) / l2(y)) / (d.sqrt() - 1.0)
}

fn oracle_clip_normalize(b: &[f64]) -> Option<Vec<f64>> {
    let mut y: Vec<f64> = b.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
    let n = l2(&y);
    if n == 0.0 {
        return None;
    }
    y.iter_mut().for_each(|v| *v /= n);
    Some(y)
}

fn oracle_project(b: &[f64], c: &SparsityConstraint) -> Result<Vec<f64>> {
    match c.kind() {
        ConstraintKind::Equality => Ok(sparse_opt_oracle(b, c.k_lo())?.y),
        ConstraintKind::Unconstrained => Ok(oracle_clip_normalize(b).unwrap_or_else(|| {
            let mut arg = 0;
            for (i, &v) in b.iter().enumerate() {
                if v > b[arg] {
                    arg = i;
                }
            }
            let mut y = vec![0.0; b.len()];
            y[arg] = 1.0;
            y
        })),
        ConstraintKind::Interval => match oracle_clip_normalize(b) {
            Some(y) => {
                let sp = oracle_measure(&y);
                if sp < c.alpha_lo() {
                    Ok(sparse_opt_oracle(b, c.k_lo())?.y)
                } else if sp > c.alpha_hi() {
                    Ok(sparse_opt_oracle(b, c.k_hi())?.y)
                } else {
                    Ok(y)
                }
            }
            None => Ok(sparse_opt_oracle(b, c.k_hi())?.y),
        },
    }
}

/// Same column updates as the sequential pass, with a fixed visit order,
/// but the gradient state `C = -XH' + WHH'` is rebuilt from scratch before
/// every column instead of being updated incrementally. Dead columns
/// (all-zero direction) are left unchanged.
pub fn naive_pass_oracle(
    x: &DenseMatrix,
    w: &DenseMatrix,
    h: &DenseMatrix,
    constraints: &[SparsityConstraint],
    order: &[usize],
) -> Result<DenseMatrix> {
    let m = w.rows();
    let r = w.cols();
    if x.rows() != m || h.rows() != r || h.cols() != x.cols() || constraints.len() != r {
        return Err(Error::Dimension("naive_pass_oracle: shape mismatch".into()));
    }
    let ht = h.transpose();
    let gram = h.matmul(&ht)?;
    let xht = x.matmul(&ht)?;

    let mut w = w.clone();
    for &j in order {
        // C from scratch, every time.
        let mut c = w.matmul(&gram)?;
        for l in 0..r {
            for (cv, &xv) in c.column_mut(l).iter_mut().zip(xht.column(l)) {
                *cv -= xv;
            }
        }
        let g_jj = gram.get(j, j);
        let direction: Vec<f64> = c
            .column(j)
            .iter()
            .zip(w.column(j))
            .map(|(&cv, &wv)| -(cv - wv * g_jj))
            .collect();
        if direction.iter().all(|&v| v == 0.0) {
            continue;
        }
        let t = oracle_project(&direction, &constraints[j])?;
        w.column_mut(j).copy_from_slice(&t);
    }
    Ok(w)
}
