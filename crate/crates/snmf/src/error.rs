//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by matrix kernels, projections, solvers and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// Incompatible or invalid shapes.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A scalar parameter outside its admissible range.
    #[error("out of range: {0}")]
    Range(String),

    /// A constraint specification that cannot be satisfied or applied.
    #[error("invalid constraint: {0}")]
    Constraint(String),

    /// Column with zero norm where a direction is required.
    #[error("degenerate column {index}: zero norm")]
    DegenerateColumn { index: usize },

    /// Sparsity measure of the zero vector.
    #[error("sparsity measure undefined for the zero vector")]
    UndefinedMeasure,

    /// The iterative baseline projection failed to reach feasibility.
    #[error("baseline projection did not converge after {iterations} iterations")]
    BaselineFailure { iterations: usize },

    /// A malformed cell in a CSV file. Rows and columns are 1-based.
    #[error("{path}: row {row}, column {col}: expected a number, found {token:?}")]
    NonNumericCell {
        path: String,
        row: usize,
        col: usize,
        token: String,
    },

    /// A row whose field count differs from the first row's.
    #[error("{path}: row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        path: String,
        row: usize,
        expected: usize,
        found: usize,
    },

    /// A negative entry in a matrix that must be nonnegative.
    #[error("{path}: row {row}, column {col}: negative entry {value}")]
    NegativeEntry {
        path: String,
        row: usize,
        col: usize,
        value: f64,
    },

    /// A non-finite entry in a numeric file.
    #[error("{path}: row {row}, column {col}: non-finite entry")]
    NonFiniteEntry { path: String, row: usize, col: usize },

    /// Structurally invalid file content (bad header, empty file, bad field).
    #[error("{path}: {message}")]
    Format { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
