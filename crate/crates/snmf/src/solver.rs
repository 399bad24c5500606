//! Factorization drivers: the sequential column-by-column pass, the batch
//! projected-gradient baseline, and the alternating solvers built on them.
//!
//! The sequential pass keeps `C = -XH' + WHH'` incrementally up to date so
//! each column update costs O(mr) on top of one projection; every column
//! update solves its subproblem exactly, which makes the objective
//! non-increasing per column, not just per pass.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::matrix::{frobenius_error, frobenius_error_wdh, DenseMatrix};
use crate::rng::SeededRng;
use crate::sparsity::{projection_hoyer, ConstraintKind, SparsityConstraint};
use crate::updates::{diag_mult, nnls_mult, UpdateConfig};

/// One factorization instance: the data, the rank, and how each column of W
/// (and optionally each row of H) is constrained.
#[derive(Debug, Clone)]
pub struct FactorizationProblem {
    pub x: DenseMatrix,
    pub rank: usize,
    /// One constraint per column of W.
    pub w_constraints: Vec<SparsityConstraint>,
    /// One constraint per row of H, when the H side is constrained.
    pub h_constraints: Option<Vec<SparsityConstraint>>,
    /// Solve X ~ WDH with unit-norm columns of W and rows of H.
    pub bisparse: bool,
    /// Restrict D to its diagonal.
    pub diagonal_d: bool,
}

impl FactorizationProblem {
    /// Sparsity on W only.
    pub fn new(
        x: DenseMatrix,
        rank: usize,
        w_constraints: Vec<SparsityConstraint>,
    ) -> Result<Self> {
        let p = FactorizationProblem {
            x,
            rank,
            w_constraints,
            h_constraints: None,
            bisparse: false,
            diagonal_d: false,
        };
        p.validate()?;
        Ok(p)
    }

    /// Sparsity on both factors, scale absorbed by D.
    pub fn new_bisparse(
        x: DenseMatrix,
        rank: usize,
        w_constraints: Vec<SparsityConstraint>,
        h_constraints: Vec<SparsityConstraint>,
        diagonal_d: bool,
    ) -> Result<Self> {
        let p = FactorizationProblem {
            x,
            rank,
            w_constraints,
            h_constraints: Some(h_constraints),
            bisparse: true,
            diagonal_d,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::Range("rank must be at least 1".into()));
        }
        self.x.validate_nonnegative("X")?;
        if self.w_constraints.len() != self.rank {
            return Err(Error::Constraint(format!(
                "{} W-column constraints for rank {}",
                self.w_constraints.len(),
                self.rank
            )));
        }
        for (j, c) in self.w_constraints.iter().enumerate() {
            if c.dim() != self.x.rows() {
                return Err(Error::Constraint(format!(
                    "W constraint {j} is for dimension {}, X has {} rows",
                    c.dim(),
                    self.x.rows()
                )));
            }
        }
        if let Some(hcs) = &self.h_constraints {
            if hcs.len() != self.rank {
                return Err(Error::Constraint(format!(
                    "{} H-row constraints for rank {}",
                    hcs.len(),
                    self.rank
                )));
            }
            for (i, c) in hcs.iter().enumerate() {
                if c.dim() != self.x.cols() {
                    return Err(Error::Constraint(format!(
                        "H constraint {i} is for dimension {}, X has {} columns",
                        c.dim(),
                        self.x.cols()
                    )));
                }
            }
        }
        if self.bisparse && self.h_constraints.is_none() {
            return Err(Error::Constraint(
                "bisparse problems need H-row constraints".into(),
            ));
        }
        Ok(())
    }
}

/// Order in which the sequential pass visits columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnOrder {
    /// Fresh seeded permutation every pass.
    Random,
    /// 0..r, for debugging and oracle comparisons.
    Fixed,
}

/// Which algorithm updates W.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WAlgorithm {
    /// Sequential pass with the exact projection.
    Sequential,
    /// Sequential pass with the iterative baseline projection swapped in.
    SequentialHoyer,
    /// Whole-matrix projected gradient with an adaptive step.
    BatchGradient,
}

/// When to stop the outer loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    /// Run exactly `outer_iters` iterations.
    FixedIters,
    /// Stop early once the relative error change drops below the tolerance.
    RelativeErrorChange(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub outer_iters: usize,
    pub update: UpdateConfig,
    pub seed: u64,
    pub column_order: ColumnOrder,
    pub w_algorithm: WAlgorithm,
    pub termination: Termination,
    /// Record wall-clock seconds in traces. Off by default so repeated runs
    /// with the same seed produce byte-identical traces.
    pub wall_clock: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            outer_iters: 100,
            update: UpdateConfig::default(),
            seed: 42,
            column_order: ColumnOrder::Random,
            w_algorithm: WAlgorithm::Sequential,
            termination: Termination::FixedIters,
            wall_clock: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.outer_iters == 0 {
            return Err(Error::Range("outer_iters must be at least 1".into()));
        }
        if let Termination::RelativeErrorChange(tol) = self.termination {
            if !tol.is_finite() || tol <= 0.0 {
                return Err(Error::Range(format!(
                    "termination tolerance must be positive, got {tol}"
                )));
            }
        }
        self.update.validate()
    }
}

/// One trace record per matrix update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub updates: u64,
    pub elapsed_s: f64,
    pub error: f64,
}

/// Reconstruction error after every matrix update (a W pass, an H sweep and
/// a D sweep each count as one update).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
}

impl ConvergenceTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, updates: u64, elapsed_s: f64, error: f64) {
        debug_assert!(error.is_finite() && error >= 0.0);
        debug_assert!(self.records.last().is_none_or(|r| r.updates < updates));
        self.records.push(TraceRecord {
            updates,
            elapsed_s,
            error,
        });
    }

    pub fn final_error(&self) -> Option<f64> {
        self.records.last().map(|r| r.error)
    }
}

struct Clock {
    start: Option<Instant>,
}

impl Clock {
    fn new(wall: bool) -> Self {
        Clock {
            start: wall.then(Instant::now),
        }
    }

    fn elapsed(&self) -> f64 {
        self.start.map_or(0.0, |s| s.elapsed().as_secs_f64())
    }
}

/// Seeded starting point: every W column is the projection of a positive
/// random vector (column 0) or of one of its random permutations, so each
/// column is feasible from the start. H is uniform random, or row-projected
/// when the H side is constrained. D starts at the identity for bisparse
/// problems.
pub fn initialize(
    problem: &FactorizationProblem,
    cfg: &SolverConfig,
) -> Result<(DenseMatrix, DenseMatrix, Option<DenseMatrix>)> {
    problem.validate()?;
    cfg.validate()?;
    let mut rng = SeededRng::new(cfg.seed);
    initialize_with(problem, &mut rng)
}

fn initialize_with(
    problem: &FactorizationProblem,
    rng: &mut SeededRng,
) -> Result<(DenseMatrix, DenseMatrix, Option<DenseMatrix>)> {
    let m = problem.x.rows();
    let n = problem.x.cols();
    let r = problem.rank;

    let base: Vec<f64> = (0..m).map(|_| rng.uniform()).collect();
    let mut w = DenseMatrix::zeros(m, r);
    for j in 0..r {
        let v = if j == 0 {
            base.clone()
        } else {
            let mut p = base.clone();
            rng.shuffle(&mut p);
            p
        };
        let sol = problem.w_constraints[j].project(&v)?;
        w.column_mut(j).copy_from_slice(&sol.y);
    }

    let mut h = DenseMatrix::zeros(r, n);
    match &problem.h_constraints {
        None => {
            for j in 0..n {
                for i in 0..r {
                    h.set(i, j, rng.uniform());
                }
            }
        }
        Some(hcs) => {
            let base_h: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
            for (i, hc) in hcs.iter().enumerate() {
                let v = if i == 0 {
                    base_h.clone()
                } else {
                    let mut p = base_h.clone();
                    rng.shuffle(&mut p);
                    p
                };
                let sol = hc.project(&v)?;
                for (j, &val) in sol.y.iter().enumerate() {
                    h.set(i, j, val);
                }
            }
        }
    }

    let d = problem.bisparse.then(|| DenseMatrix::identity(r));
    Ok((w, h, d))
}

/// One sequential pass over the columns of W in the configured order.
pub fn sequential_pass(
    x: &DenseMatrix,
    w: &DenseMatrix,
    h: &DenseMatrix,
    constraints: &[SparsityConstraint],
    cfg: &SolverConfig,
    rng: &mut SeededRng,
) -> Result<DenseMatrix> {
    let order = match cfg.column_order {
        ColumnOrder::Random => rng.permutation(w.cols()),
        ColumnOrder::Fixed => (0..w.cols()).collect(),
    };
    let use_hoyer = cfg.w_algorithm == WAlgorithm::SequentialHoyer;
    sequential_pass_with_order(x, w, h, constraints, &order, use_hoyer, rng, |_, _| {})
}

/// The sequential pass with an explicit visit order and a per-column
/// observer, called with the column index and the factor state after each
/// column is written. Used by oracle comparisons and monotonicity checks.
#[allow(clippy::too_many_arguments)]
pub fn sequential_pass_with_order<F>(
    x: &DenseMatrix,
    w: &DenseMatrix,
    h: &DenseMatrix,
    constraints: &[SparsityConstraint],
    order: &[usize],
    use_hoyer: bool,
    rng: &mut SeededRng,
    mut on_column: F,
) -> Result<DenseMatrix>
where
    F: FnMut(usize, &DenseMatrix),
{
    let m = w.rows();
    let r = w.cols();
    if x.rows() != m || h.rows() != r || h.cols() != x.cols() || constraints.len() != r {
        return Err(Error::Dimension(format!(
            "sequential_pass: X {}x{}, W {}x{}, H {}x{}, {} constraints",
            x.rows(),
            x.cols(),
            m,
            r,
            h.rows(),
            h.cols(),
            constraints.len()
        )));
    }

    let ht = h.transpose();
    let gram = h.matmul(&ht)?; // G = HH', r x r
    let xht = x.matmul(&ht)?; // m x r
    // C = -XH' + WG
    let mut c = w.matmul(&gram)?;
    for l in 0..r {
        for (cv, &xv) in c.column_mut(l).iter_mut().zip(xht.column(l)) {
            *cv -= xv;
        }
    }

    let mut w = w.clone();
    let mut u = vec![0.0; m];
    let mut direction = vec![0.0; m];
    let mut delta = vec![0.0; m];
    for &j in order {
        if j >= r {
            return Err(Error::Range(format!("column index {j} out of range")));
        }
        let g_jj = gram.get(j, j);
        {
            let c_col = c.column(j);
            let w_col = w.column(j);
            for i in 0..m {
                u[i] = c_col[i] - w_col[i] * g_jj;
            }
        }

        let t = if u.iter().all(|&v| v == 0.0) {
            // Dead feature: the objective no longer depends on this column,
            // so refresh it from the seeded stream to revive it.
            let v: Vec<f64> = (0..m).map(|_| rng.uniform()).collect();
            constraints[j].project(&v)?.y
        } else {
            for (d, &uv) in direction.iter_mut().zip(&u) {
                *d = -uv;
            }
            if use_hoyer && constraints[j].kind() == ConstraintKind::Equality {
                projection_hoyer(&direction, constraints[j].k_lo())?
            } else {
                constraints[j].project(&direction)?.y
            }
        };

        // C += (t - W_j) G_j' before overwriting the column.
        for (dv, (&tv, &wv)) in delta.iter_mut().zip(t.iter().zip(w.column(j))) {
            *dv = tv - wv;
        }
        for l in 0..r {
            let g_jl = gram.get(j, l);
            if g_jl == 0.0 {
                continue;
            }
            for (cv, &dv) in c.column_mut(l).iter_mut().zip(&delta) {
                *cv += dv * g_jl;
            }
        }
        w.column_mut(j).copy_from_slice(&t);
        debug_assert!(w.is_nonnegative());
        on_column(j, &w);
    }
    Ok(w)
}

/// Cumulative state of the batch gradient baseline across passes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchState {
    /// Current step size.
    pub step: f64,
    /// Set when 40 halvings could not produce a non-increasing step; the
    /// pass then returned W unchanged.
    pub stalled: bool,
}

impl Default for BatchState {
    fn default() -> Self {
        BatchState {
            step: 1.0,
            stalled: false,
        }
    }
}

/// Whole-matrix projected gradient step with adaptive step size: on an
/// objective increase the step is halved and retried (up to 40 times),
/// otherwise it is accepted and grown by 1.2.
pub fn batch_pass(
    x: &DenseMatrix,
    w: &DenseMatrix,
    h: &DenseMatrix,
    constraints: &[SparsityConstraint],
    state: &mut BatchState,
) -> Result<DenseMatrix> {
    let m = w.rows();
    let r = w.cols();
    if x.rows() != m || h.rows() != r || h.cols() != x.cols() || constraints.len() != r {
        return Err(Error::Dimension(format!(
            "batch_pass: X {}x{}, W {}x{}, H {}x{}",
            x.rows(),
            x.cols(),
            m,
            r,
            h.rows(),
            h.cols()
        )));
    }
    let ht = h.transpose();
    let gram = h.matmul(&ht)?;
    let xht = x.matmul(&ht)?;
    // grad = WHH' - XH'
    let mut grad = w.matmul(&gram)?;
    for j in 0..r {
        for i in 0..m {
            grad.set(i, j, grad.get(i, j) - xht.get(i, j));
        }
    }

    let f0 = frobenius_error(x, w, h)?;
    let mut step = state.step;
    let mut z = vec![0.0; m];
    for _ in 0..40 {
        let mut w_new = DenseMatrix::zeros(m, r);
        for (j, constraint) in constraints.iter().enumerate() {
            let w_col = w.column(j);
            let g_col = grad.column(j);
            for i in 0..m {
                z[i] = w_col[i] - step * g_col[i];
            }
            let sol = constraint.project(&z)?;
            w_new.column_mut(j).copy_from_slice(&sol.y);
        }
        let f1 = frobenius_error(x, &w_new, h)?;
        if f1 <= f0 {
            state.step = step * 1.2;
            state.stalled = false;
            return Ok(w_new);
        }
        step *= 0.5;
    }
    // No improving step found (typically a fixed point): keep the entry
    // step so later passes are not poisoned by the collapsed one.
    state.stalled = true;
    Ok(w.clone())
}

/// Stop decision for the outer loop after `completed_outer` iterations.
pub fn check_termination(
    trace: &ConvergenceTrace,
    cfg: &SolverConfig,
    completed_outer: usize,
) -> bool {
    if completed_outer >= cfg.outer_iters {
        return true;
    }
    match cfg.termination {
        Termination::FixedIters => false,
        Termination::RelativeErrorChange(tol) => {
            let n = trace.records.len();
            if n < 2 {
                return false;
            }
            let prev = trace.records[n - 2].error;
            let last = trace.records[n - 1].error;
            (last - prev).abs() / prev.max(1e-300) < tol
        }
    }
}

/// Result of a two-factor run.
#[derive(Debug, Clone)]
pub struct Factorization {
    pub w: DenseMatrix,
    pub h: DenseMatrix,
    pub trace: ConvergenceTrace,
}

/// Result of a three-factor (bisparse) run.
#[derive(Debug, Clone)]
pub struct BisparseFactorization {
    pub w: DenseMatrix,
    pub d: DenseMatrix,
    pub h: DenseMatrix,
    pub trace: ConvergenceTrace,
}

/// Alternates the configured W update with a multiplicative H update until
/// termination. Sparsity may sit on either factor, but only one: with
/// constraints on H rows only, the problem is transposed internally and the
/// roles swapped back on return.
pub fn ssnmf(problem: &FactorizationProblem, cfg: &SolverConfig) -> Result<Factorization> {
    problem.validate()?;
    cfg.validate()?;
    if problem.bisparse {
        return Err(Error::Constraint(
            "bisparse problems are solved by `bisparse`, not `ssnmf`".into(),
        ));
    }
    let w_constrained = problem
        .w_constraints
        .iter()
        .any(|c| c.kind() != ConstraintKind::Unconstrained);
    match &problem.h_constraints {
        Some(_) if w_constrained => Err(Error::Constraint(
            "sparsity on both factors needs the bisparse solver".into(),
        )),
        Some(hcs) => {
            // Constraints on H only: factor X' = H'W' with the roles swapped.
            let transposed = FactorizationProblem {
                x: problem.x.transpose(),
                rank: problem.rank,
                w_constraints: hcs.clone(),
                h_constraints: None,
                bisparse: false,
                diagonal_d: false,
            };
            let sol = ssnmf_core(&transposed, cfg)?;
            Ok(Factorization {
                w: sol.h.transpose(),
                h: sol.w.transpose(),
                trace: sol.trace,
            })
        }
        None => ssnmf_core(problem, cfg),
    }
}

fn ssnmf_core(problem: &FactorizationProblem, cfg: &SolverConfig) -> Result<Factorization> {
    let mut rng = SeededRng::new(cfg.seed);
    let (w, h, _) = initialize_with(problem, &mut rng)?;
    ssnmf_loop(problem, cfg, w, h, rng)
}

/// Runs the ssnmf alternation from a caller-supplied starting point.
pub fn ssnmf_from(
    problem: &FactorizationProblem,
    cfg: &SolverConfig,
    w0: DenseMatrix,
    h0: DenseMatrix,
) -> Result<Factorization> {
    problem.validate()?;
    cfg.validate()?;
    let rng = SeededRng::new(cfg.seed);
    ssnmf_loop(problem, cfg, w0, h0, rng)
}

fn ssnmf_loop(
    problem: &FactorizationProblem,
    cfg: &SolverConfig,
    mut w: DenseMatrix,
    mut h: DenseMatrix,
    mut rng: SeededRng,
) -> Result<Factorization> {
    let x = &problem.x;
    let clock = Clock::new(cfg.wall_clock);
    let mut trace = ConvergenceTrace::new();
    let mut updates = 0u64;
    let mut batch_state = BatchState::default();

    for outer in 0..cfg.outer_iters {
        w = match cfg.w_algorithm {
            WAlgorithm::Sequential | WAlgorithm::SequentialHoyer => {
                sequential_pass(x, &w, &h, &problem.w_constraints, cfg, &mut rng)?
            }
            WAlgorithm::BatchGradient => {
                batch_pass(x, &w, &h, &problem.w_constraints, &mut batch_state)?
            }
        };
        updates += 1;
        trace.push(updates, clock.elapsed(), frobenius_error(x, &w, &h)?);

        h = nnls_mult(x, &w, &h, &cfg.update)?;
        updates += 1;
        trace.push(updates, clock.elapsed(), frobenius_error(x, &w, &h)?);

        if check_termination(&trace, cfg, outer + 1) {
            break;
        }
    }
    Ok(Factorization { w, h, trace })
}

/// Alternates three blocks for X ~ WDH: a sequential pass on W against the
/// effective coefficients DH, a transposed sequential pass on H against the
/// effective basis WD, and a multiplicative sweep on D.
pub fn bisparse(problem: &FactorizationProblem, cfg: &SolverConfig) -> Result<BisparseFactorization> {
    problem.validate()?;
    cfg.validate()?;
    if !problem.bisparse {
        return Err(Error::Constraint("problem is not marked bisparse".into()));
    }
    let mut rng = SeededRng::new(cfg.seed);
    let (w, h, d) = initialize_with(problem, &mut rng)?;
    bisparse_loop(problem, cfg, w, d.expect("bisparse init provides D"), h, rng)
}

/// Runs the bisparse alternation from a caller-supplied starting point.
pub fn bisparse_from(
    problem: &FactorizationProblem,
    cfg: &SolverConfig,
    w0: DenseMatrix,
    d0: DenseMatrix,
    h0: DenseMatrix,
) -> Result<BisparseFactorization> {
    problem.validate()?;
    cfg.validate()?;
    if !problem.bisparse {
        return Err(Error::Constraint("problem is not marked bisparse".into()));
    }
    let rng = SeededRng::new(cfg.seed);
    bisparse_loop(problem, cfg, w0, d0, h0, rng)
}

fn bisparse_loop(
    problem: &FactorizationProblem,
    cfg: &SolverConfig,
    mut w: DenseMatrix,
    mut d: DenseMatrix,
    mut h: DenseMatrix,
    mut rng: SeededRng,
) -> Result<BisparseFactorization> {
    let x = &problem.x;
    let h_constraints = problem
        .h_constraints
        .as_ref()
        .expect("validated: bisparse has H constraints");
    let clock = Clock::new(cfg.wall_clock);
    let mut trace = ConvergenceTrace::new();
    let mut updates = 0u64;

    for outer in 0..cfg.outer_iters {
        // W block against the effective coefficient matrix DH.
        let dh = d.matmul(&h)?;
        w = sequential_pass(x, &w, &dh, &problem.w_constraints, cfg, &mut rng)?;
        updates += 1;
        trace.push(updates, clock.elapsed(), frobenius_error_wdh(x, &w, &d, &h)?);

        // H block, transposed: X' ~ H'(WD)'.
        let wd = w.matmul(&d)?;
        let xt = x.transpose();
        let ht = h.transpose();
        let wdt = wd.transpose();
        let ht_new = sequential_pass(&xt, &ht, &wdt, h_constraints, cfg, &mut rng)?;
        h = ht_new.transpose();
        updates += 1;
        trace.push(updates, clock.elapsed(), frobenius_error_wdh(x, &w, &d, &h)?);

        // D block.
        d = diag_mult(x, &w, &h, &d, problem.diagonal_d, &cfg.update)?;
        updates += 1;
        trace.push(updates, clock.elapsed(), frobenius_error_wdh(x, &w, &d, &h)?);

        if check_termination(&trace, cfg, outer + 1) {
            break;
        }
    }
    Ok(BisparseFactorization { w, d, h, trace })
}
