//! Command-line surface: one binary, one subcommand per task.

use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "snmf",
    version,
    about = "Sparse nonnegative matrix factorization with exact L1/L2 sparsity projections"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Factorize a CSV matrix with sparsity constraints on one factor.
    Factorize(FactorizeArgs),
    /// Factorize as X ~ WDH with sparsity on both factors.
    Bisparse(BisparseArgs),
    /// Project one vector onto the sparsity-constrained unit sphere.
    Project(ProjectArgs),
    /// Print the sparsity of every column (or row) of a CSV matrix.
    Measure(MeasureArgs),
    /// Time the exact projection against the iterative baseline.
    BenchProjection(BenchArgs),
    /// Generate a planted-factor dataset.
    Synth(SynthArgs),
    /// Render factor columns as a PGM grid of tiles.
    Render(RenderArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WAlgorithmArg {
    /// Sequential column updates through the exact projection.
    Sequential,
    /// Sequential column updates through the iterative baseline projection.
    SequentialHoyer,
    /// Batch projected gradient with adaptive step.
    Batch,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TermArg {
    Fixed,
    Rel(f64),
}

pub fn parse_termination(s: &str) -> Result<TermArg, String> {
    if s == "fixed" {
        return Ok(TermArg::Fixed);
    }
    if let Some(tol) = s.strip_prefix("rel:") {
        let tol: f64 = tol
            .parse()
            .map_err(|_| format!("bad tolerance in {s:?}"))?;
        if !tol.is_finite() || tol <= 0.0 {
            return Err(format!("tolerance must be positive, got {tol}"));
        }
        return Ok(TermArg::Rel(tol));
    }
    Err(format!("expected `fixed` or `rel:TOL`, got {s:?}"))
}

/// `ROWSxCOLS`, e.g. `19x19`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
}

pub fn parse_shape(s: &str) -> Result<Shape, String> {
    let (a, b) = s
        .split_once('x')
        .ok_or_else(|| format!("expected ROWSxCOLS, got {s:?}"))?;
    let rows: usize = a.parse().map_err(|_| format!("bad row count in {s:?}"))?;
    let cols: usize = b.parse().map_err(|_| format!("bad column count in {s:?}"))?;
    if rows == 0 || cols == 0 {
        return Err("shape sides must be positive".into());
    }
    Ok(Shape { rows, cols })
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("wspec").required(true).args(["sparsity_w", "constraints_w"])))]
#[command(group(ArgGroup::new("hspec").args(["sparsity_h", "constraints_h"])))]
pub struct FactorizeArgs {
    /// Input data matrix (headerless CSV, nonnegative).
    #[arg(long)]
    pub input: PathBuf,
    /// Number of features.
    #[arg(long)]
    pub rank: usize,
    /// One sparsity value applied to every column of W.
    #[arg(long)]
    pub sparsity_w: Option<f64>,
    /// Per-column constraint file for W (rows `index,kind,alpha_lo,alpha_hi`).
    #[arg(long)]
    pub constraints_w: Option<PathBuf>,
    /// One sparsity value applied to every row of H.
    #[arg(long)]
    pub sparsity_h: Option<f64>,
    /// Per-row constraint file for H.
    #[arg(long)]
    pub constraints_h: Option<PathBuf>,
    /// Outer iteration budget.
    #[arg(long)]
    pub outer_iters: usize,
    /// Multiplicative sweeps per H update.
    #[arg(long, default_value_t = 1)]
    pub inner_repeats: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Denominator guard for the multiplicative updates.
    #[arg(long, default_value_t = 1e-9)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t = WAlgorithmArg::Sequential)]
    pub w_algorithm: WAlgorithmArg,
    /// `fixed` or `rel:TOL` (stop early on small relative error change).
    #[arg(long, value_parser = parse_termination, default_value = "fixed")]
    pub term: TermArg,
    /// Output directory for W.csv, H.csv, trace.csv and config.echo.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("wspec").required(true).args(["sparsity_w", "constraints_w"])))]
#[command(group(ArgGroup::new("hspec").required(true).args(["sparsity_h", "constraints_h"])))]
pub struct BisparseArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub rank: usize,
    #[arg(long)]
    pub sparsity_w: Option<f64>,
    #[arg(long)]
    pub constraints_w: Option<PathBuf>,
    #[arg(long)]
    pub sparsity_h: Option<f64>,
    #[arg(long)]
    pub constraints_h: Option<PathBuf>,
    /// Keep D diagonal.
    #[arg(long)]
    pub diagonal_d: bool,
    #[arg(long)]
    pub outer_iters: usize,
    #[arg(long, default_value_t = 1)]
    pub inner_repeats: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t = WAlgorithmArg::Sequential)]
    pub w_algorithm: WAlgorithmArg,
    #[arg(long, value_parser = parse_termination, default_value = "fixed")]
    pub term: TermArg,
    /// Output directory for W.csv, D.csv, H.csv, trace.csv and config.echo.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BaselineArg {
    Hoyer,
}

#[derive(Args, Debug)]
pub struct ProjectArgs {
    /// Vector file (one CSV column or row; any real values).
    #[arg(long)]
    pub vector: PathBuf,
    /// Target sparsity in [0, 1].
    #[arg(long)]
    pub sparsity: f64,
    /// Use the iterative baseline instead of the exact projection.
    #[arg(long, value_enum)]
    pub baseline: Option<BaselineArg>,
}

#[derive(Args, Debug)]
pub struct MeasureArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Measure columns (default).
    #[arg(long, conflicts_with = "rows")]
    pub columns: bool,
    /// Measure rows instead of columns.
    #[arg(long)]
    pub rows: bool,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Problem dimensions, comma-separated (e.g. 1,2,4,...,4096).
    #[arg(long, value_delimiter = ',', required = true)]
    pub dims: Vec<usize>,
    /// Vectors per problem batch.
    #[arg(long, default_value_t = 100)]
    pub batch_cols: usize,
    /// Sparsity values, comma-separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.2, 0.4, 0.6, 0.8])]
    pub sparsities: Vec<f64>,
    /// Timed trials per grid point.
    #[arg(long, default_value_t = 40)]
    pub trials: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output CSV (`dim,sparsity,algorithm,mean_seconds`).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Rows of the generated matrix.
    #[arg(long)]
    pub m: usize,
    /// Columns of the generated matrix.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub rank: usize,
    /// Sparsity of the planted W columns.
    #[arg(long)]
    pub sparsity_w: f64,
    /// Sparsity of the planted H rows; switches to the W*D*H* model.
    #[arg(long)]
    pub sparsity_h: Option<f64>,
    /// Standard deviation of additive Gaussian noise, truncated at zero.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output matrix file.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the planted factors into this directory.
    #[arg(long)]
    pub save_truth: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    /// Factor matrix whose columns become tiles.
    #[arg(long)]
    pub features: PathBuf,
    /// Tile shape, ROWSxCOLS, with ROWS*COLS equal to the feature length.
    #[arg(long, value_parser = parse_shape)]
    pub tile: Shape,
    /// Grid shape, ROWSxCOLS, with at least as many cells as features.
    #[arg(long, value_parser = parse_shape)]
    pub grid: Shape,
    /// Output PGM file.
    #[arg(long)]
    pub out: PathBuf,
}
