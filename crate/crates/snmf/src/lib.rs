//! Sparse nonnegative matrix factorization under the L1/L2 sparsity
//! measure.
//!
//! The crate provides:
//!
//! - an exact O(m log m) projection maximizing a linear objective over
//!   `{ y >= 0, ||y||_1 = k, ||y||_2 = 1 }` ([`sparsity::sparse_opt`]),
//!   plus interval-constrained variants and the classical iterative
//!   baseline ([`sparsity::projection_hoyer`]);
//! - sequential block-coordinate-descent solvers that update one basis
//!   column at a time through that projection ([`solver::ssnmf`],
//!   [`solver::bisparse`]), along with the batch projected-gradient
//!   baseline and multiplicative updates for the unconstrained factor;
//! - CSV / PGM file formats ([`io`]) and a projection timing sweep
//!   ([`bench`]).
//!
//! Everything is deterministic under a fixed seed: matrix kernels
//! accumulate in a fixed order and all randomness flows through
//! [`rng::SeededRng`].

pub mod bench;
pub mod error;
pub mod io;
pub mod matrix;
pub mod rng;
pub mod solver;
pub mod sparsity;
pub mod updates;

pub use error::{Error, Result};
pub use matrix::{column_normalize, frobenius_error, frobenius_error_wdh, DenseMatrix};
pub use rng::SeededRng;
pub use solver::{
    batch_pass, bisparse, bisparse_from, check_termination, initialize, sequential_pass,
    sequential_pass_with_order, ssnmf, ssnmf_from, BatchState, BisparseFactorization, ColumnOrder,
    ConvergenceTrace, Factorization, FactorizationProblem, SolverConfig, Termination, TraceRecord,
    WAlgorithm,
};
pub use sparsity::{
    interval_project, k_from_alpha, projection_hoyer, sparse_opt, sparse_opt_early_break,
    sparsity_measure, ConstraintKind, ProjectionSolution, SparsityConstraint,
};
pub use updates::{diag_mult, nnls_mult, nnls_mult_w, UpdateConfig};
