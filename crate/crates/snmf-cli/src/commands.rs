//! Subcommand implementations. Everything here returns the library error
//! type; `main` maps it to the data-error exit code.

use std::fs;
use std::path::{Path, PathBuf};

use snmf::bench::{run_projection_bench, bench_to_csv, BenchParams};
use snmf::error::{Error, Result};
use snmf::io;
use snmf::matrix::DenseMatrix;
use snmf::rng::SeededRng;
use snmf::solver::{
    bisparse, initialize, ssnmf, ColumnOrder, FactorizationProblem, SolverConfig, Termination,
    WAlgorithm,
};
use snmf::sparsity::{
    k_from_alpha, projection_hoyer, sparse_opt, sparsity_measure, ConstraintKind,
    SparsityConstraint,
};
use snmf::updates::UpdateConfig;

use crate::args::{
    BaselineArg, BenchArgs, BisparseArgs, FactorizeArgs, MeasureArgs, ProjectArgs, RenderArgs,
    SynthArgs, TermArg, WAlgorithmArg,
};

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Prints one line to stdout, exiting quietly when the consumer closed the
/// pipe (e.g. `snmf measure ... | head`).
fn emit(line: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{line}") {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
        Err(e) => Err(e.into()),
    }
}

/// Builds the per-column (or per-row) constraints from either a single
/// sparsity value or a constraint file.
fn side_constraints(
    sparsity: Option<f64>,
    file: Option<&PathBuf>,
    rank: usize,
    dim: usize,
) -> Result<Option<Vec<SparsityConstraint>>> {
    match (sparsity, file) {
        (Some(alpha), None) => {
            let c = SparsityConstraint::equality(alpha, dim)?;
            Ok(Some(vec![c; rank]))
        }
        (None, Some(path)) => Ok(Some(io::load_constraints(path, rank, dim)?)),
        (None, None) => Ok(None),
        (Some(_), Some(_)) => Err(Error::Constraint(
            "a sparsity value and a constraint file are mutually exclusive".into(),
        )),
    }
}

fn solver_config(
    outer_iters: usize,
    inner_repeats: usize,
    seed: u64,
    eps: f64,
    w_algorithm: WAlgorithmArg,
    term: TermArg,
) -> SolverConfig {
    SolverConfig {
        outer_iters,
        update: UpdateConfig {
            epsilon: eps,
            inner_repeats,
        },
        seed,
        column_order: ColumnOrder::Random,
        w_algorithm: match w_algorithm {
            WAlgorithmArg::Sequential => WAlgorithm::Sequential,
            WAlgorithmArg::SequentialHoyer => WAlgorithm::SequentialHoyer,
            WAlgorithmArg::Batch => WAlgorithm::BatchGradient,
        },
        termination: match term {
            TermArg::Fixed => Termination::FixedIters,
            TermArg::Rel(tol) => Termination::RelativeErrorChange(tol),
        },
        wall_clock: false,
    }
}

struct EchoLine(&'static str, String);

fn write_echo(path: &Path, command: &str, lines: &[EchoLine]) -> Result<()> {
    let mut out = format!("command = {command}\n");
    for EchoLine(key, value) in lines {
        out.push_str(&format!("{key} = {value}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

fn display_opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".into(), |x| x.to_string())
}

fn display_path_opt(v: &Option<PathBuf>) -> String {
    v.as_ref()
        .map_or_else(|| "none".into(), |p| p.display().to_string())
}

fn algorithm_name(a: WAlgorithmArg) -> &'static str {
    match a {
        WAlgorithmArg::Sequential => "sequential",
        WAlgorithmArg::SequentialHoyer => "sequential-hoyer",
        WAlgorithmArg::Batch => "batch",
    }
}

fn term_name(t: TermArg) -> String {
    match t {
        TermArg::Fixed => "fixed".into(),
        TermArg::Rel(tol) => format!("rel:{tol}"),
    }
}

pub fn factorize(args: &FactorizeArgs) -> Result<()> {
    let x = io::load_matrix(&args.input)?;
    let m = x.rows();
    let n = x.cols();
    let w_constraints = side_constraints(args.sparsity_w, args.constraints_w.as_ref(), args.rank, m)?
        .expect("clap requires a W-side specification");
    let h_constraints = side_constraints(args.sparsity_h, args.constraints_h.as_ref(), args.rank, n)?;
    let cfg = solver_config(
        args.outer_iters,
        args.inner_repeats,
        args.seed,
        args.eps,
        args.w_algorithm,
        args.term,
    );

    let w_constrained = w_constraints
        .iter()
        .any(|c| c.kind() != ConstraintKind::Unconstrained);
    let implied_bisparse = h_constraints.is_some() && w_constrained;

    fs::create_dir_all(&args.out_dir)?;
    let (w_out, h_out, trace) = if implied_bisparse {
        // Sparsity on both sides means the W*D*H model with diagonal D; the
        // written H absorbs D so the two-file contract stays intact (row
        // sparsity is scale-invariant).
        let problem = FactorizationProblem::new_bisparse(
            x,
            args.rank,
            w_constraints,
            h_constraints.expect("checked above"),
            true,
        )?;
        let sol = bisparse(&problem, &cfg)?;
        let h_folded = sol.d.matmul(&sol.h)?;
        (sol.w, h_folded, sol.trace)
    } else {
        let problem = FactorizationProblem {
            x,
            rank: args.rank,
            w_constraints,
            h_constraints,
            bisparse: false,
            diagonal_d: false,
        };
        problem.validate()?;
        let sol = ssnmf(&problem, &cfg)?;
        (sol.w, sol.h, sol.trace)
    };

    io::save_matrix(&w_out, args.out_dir.join("W.csv"))?;
    io::save_matrix(&h_out, args.out_dir.join("H.csv"))?;
    io::save_trace(&trace, args.out_dir.join("trace.csv"))?;
    write_echo(
        &args.out_dir.join("config.echo"),
        "factorize",
        &[
            EchoLine("input", args.input.display().to_string()),
            EchoLine("rank", args.rank.to_string()),
            EchoLine("sparsity_w", display_opt(&args.sparsity_w)),
            EchoLine("constraints_w", display_path_opt(&args.constraints_w)),
            EchoLine("sparsity_h", display_opt(&args.sparsity_h)),
            EchoLine("constraints_h", display_path_opt(&args.constraints_h)),
            EchoLine("outer_iters", args.outer_iters.to_string()),
            EchoLine("inner_repeats", args.inner_repeats.to_string()),
            EchoLine("seed", args.seed.to_string()),
            EchoLine("eps", args.eps.to_string()),
            EchoLine("w_algorithm", algorithm_name(args.w_algorithm).to_string()),
            EchoLine("term", term_name(args.term)),
            EchoLine("out_dir", args.out_dir.display().to_string()),
            EchoLine("bisparse_implied", implied_bisparse.to_string()),
        ],
    )
}

pub fn bisparse_cmd(args: &BisparseArgs) -> Result<()> {
    let x = io::load_matrix(&args.input)?;
    let m = x.rows();
    let n = x.cols();
    let w_constraints = side_constraints(args.sparsity_w, args.constraints_w.as_ref(), args.rank, m)?
        .expect("clap requires a W-side specification");
    let h_constraints = side_constraints(args.sparsity_h, args.constraints_h.as_ref(), args.rank, n)?
        .expect("clap requires an H-side specification");
    let cfg = solver_config(
        args.outer_iters,
        args.inner_repeats,
        args.seed,
        args.eps,
        args.w_algorithm,
        args.term,
    );
    let problem = FactorizationProblem::new_bisparse(
        x,
        args.rank,
        w_constraints,
        h_constraints,
        args.diagonal_d,
    )?;
    let sol = bisparse(&problem, &cfg)?;

    fs::create_dir_all(&args.out_dir)?;
    io::save_matrix(&sol.w, args.out_dir.join("W.csv"))?;
    io::save_matrix(&sol.d, args.out_dir.join("D.csv"))?;
    io::save_matrix(&sol.h, args.out_dir.join("H.csv"))?;
    io::save_trace(&sol.trace, args.out_dir.join("trace.csv"))?;
    write_echo(
        &args.out_dir.join("config.echo"),
        "bisparse",
        &[
            EchoLine("input", args.input.display().to_string()),
            EchoLine("rank", args.rank.to_string()),
            EchoLine("sparsity_w", display_opt(&args.sparsity_w)),
            EchoLine("constraints_w", display_path_opt(&args.constraints_w)),
            EchoLine("sparsity_h", display_opt(&args.sparsity_h)),
            EchoLine("constraints_h", display_path_opt(&args.constraints_h)),
            EchoLine("diagonal_d", args.diagonal_d.to_string()),
            EchoLine("outer_iters", args.outer_iters.to_string()),
            EchoLine("inner_repeats", args.inner_repeats.to_string()),
            EchoLine("seed", args.seed.to_string()),
            EchoLine("eps", args.eps.to_string()),
            EchoLine("w_algorithm", algorithm_name(args.w_algorithm).to_string()),
            EchoLine("term", term_name(args.term)),
            EchoLine("out_dir", args.out_dir.display().to_string()),
        ],
    )
}

pub fn project(args: &ProjectArgs) -> Result<()> {
    let v = io::load_vector(&args.vector)?;
    let m = v.len();
    let k = if m == 1 {
        1.0
    } else {
        k_from_alpha(args.sparsity, m)?
    };
    let (y, support, objective) = match args.baseline {
        None => {
            let sol = sparse_opt(&v, k)?;
            (sol.y, sol.support_size, sol.objective)
        }
        Some(BaselineArg::Hoyer) => {
            let y = projection_hoyer(&v, k)?;
            let support = y.iter().filter(|&&x| x > 0.0).count();
            let objective = v.iter().zip(&y).map(|(a, b)| a * b).sum();
            (y, support, objective)
        }
    };
    let joined: Vec<String> = y.iter().map(|&x| fmt_f64(x)).collect();
    emit(&format!("solution,{}", joined.join(",")))?;
    emit(&format!("support_size,{support}"))?;
    emit(&format!("objective,{}", fmt_f64(objective)))?;
    Ok(())
}

pub fn measure(args: &MeasureArgs) -> Result<()> {
    let m = io::load_matrix(&args.input)?;
    if args.rows {
        for i in 0..m.rows() {
            emit(&fmt_f64(sparsity_measure(&m.row(i))?))?;
        }
    } else {
        for j in 0..m.cols() {
            emit(&fmt_f64(sparsity_measure(m.column(j))?))?;
        }
    }
    Ok(())
}

pub fn bench_projection(args: &BenchArgs) -> Result<()> {
    let params = BenchParams {
        dims: args.dims.clone(),
        batch_cols: args.batch_cols,
        sparsities: args.sparsities.clone(),
        trials: args.trials,
        seed: args.seed,
    };
    let rows = run_projection_bench(&params)?;
    let failures: usize = rows.iter().map(|r| r.failures).sum();
    if failures > 0 {
        eprintln!("warning: baseline projection failed to converge on {failures} inputs");
    }
    fs::write(&args.out, bench_to_csv(&rows))?;
    Ok(())
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    if args.noise < 0.0 {
        return Err(Error::Range(format!(
            "noise sigma must be nonnegative, got {}",
            args.noise
        )));
    }
    let mut w_constraints = Vec::with_capacity(args.rank);
    for _ in 0..args.rank {
        w_constraints.push(SparsityConstraint::equality(args.sparsity_w, args.m)?);
    }
    let h_constraints = match args.sparsity_h {
        None => None,
        Some(beta) => {
            let mut cs = Vec::with_capacity(args.rank);
            for _ in 0..args.rank {
                cs.push(SparsityConstraint::equality(beta, args.n)?);
            }
            Some(cs)
        }
    };
    let problem = FactorizationProblem {
        x: DenseMatrix::zeros(args.m, args.n),
        rank: args.rank,
        w_constraints,
        h_constraints,
        bisparse: args.sparsity_h.is_some(),
        diagonal_d: true,
    };
    problem.validate()?;
    let cfg = SolverConfig {
        seed: args.seed,
        ..SolverConfig::default()
    };
    let (w, h, d) = initialize(&problem, &cfg)?;

    // Extra draws (D entries, noise) come from a derived stream so the
    // planted factors depend only on the seed.
    let mut extra = SeededRng::new(args.seed ^ 0x9e37_79b9_7f4a_7c15);
    let d = d.map(|mut dm| {
        for i in 0..args.rank {
            dm.set(i, i, 0.5 + extra.uniform());
        }
        dm
    });

    let mut x = match &d {
        Some(dm) => w.matmul(dm)?.matmul(&h)?,
        None => w.matmul(&h)?,
    };
    if args.noise > 0.0 {
        for j in 0..x.cols() {
            for i in 0..x.rows() {
                let v = (x.get(i, j) + extra.normal(0.0, args.noise)).max(0.0);
                x.set(i, j, v);
            }
        }
    }

    io::save_matrix(&x, &args.out)?;
    if let Some(dir) = &args.save_truth {
        fs::create_dir_all(dir)?;
        io::save_matrix(&w, dir.join("W.csv"))?;
        io::save_matrix(&h, dir.join("H.csv"))?;
        if let Some(dm) = &d {
            io::save_matrix(dm, dir.join("D.csv"))?;
        }
    }
    Ok(())
}

pub fn render(args: &RenderArgs) -> Result<()> {
    let w = io::load_matrix(&args.features)?;
    io::render_features(
        &w,
        (args.tile.rows, args.tile.cols),
        (args.grid.rows, args.grid.cols),
        &args.out,
    )
}
