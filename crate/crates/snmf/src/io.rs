//! File formats: CSV matrices and vectors, per-column constraint files,
//! convergence traces, and PGM feature sheets.
//!
//! Numbers are written with 17 significant digits so a save/load round trip
//! reproduces every double exactly. The parsers work on plain strings (the
//! `parse_*` functions) so they can be driven directly by tests and fuzz
//! targets; the `load_*`/`save_*` functions wrap them with file access.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::solver::ConvergenceTrace;
use crate::sparsity::{ConstraintKind, SparsityConstraint};

/// Trace file header.
pub const TRACE_HEADER: &str = "updates,elapsed_s,error";

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_cell(token: &str, name: &str, row: usize, col: usize) -> Result<f64> {
    let trimmed = token.trim();
    let value: f64 = trimmed.parse().map_err(|_| Error::NonNumericCell {
        path: name.to_string(),
        row,
        col,
        token: trimmed.to_string(),
    })?;
    if !value.is_finite() {
        return Err(Error::NonFiniteEntry {
            path: name.to_string(),
            row,
            col,
        });
    }
    Ok(value)
}

fn parse_grid(text: &str, name: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        let row_no = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(Error::RaggedRow {
                    path: name.to_string(),
                    row: row_no,
                    expected: w,
                    found: fields.len(),
                })
            }
            Some(_) => {}
        }
        let mut row = Vec::with_capacity(fields.len());
        for (col_idx, token) in fields.iter().enumerate() {
            row.push(parse_cell(token, name, row_no, col_idx + 1)?);
        }
        rows.push(row);
    }
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::Format {
            path: name.to_string(),
            message: "empty file".into(),
        });
    }
    Ok(rows)
}

/// Parses a headerless CSV matrix; every entry must be finite and >= 0.
pub fn parse_matrix_csv(text: &str, name: &str) -> Result<DenseMatrix> {
    let rows = parse_grid(text, name)?;
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v < 0.0 {
                return Err(Error::NegativeEntry {
                    path: name.to_string(),
                    row: i + 1,
                    col: j + 1,
                    value: v,
                });
            }
        }
    }
    DenseMatrix::from_rows(&rows)
}

/// Parses a CSV vector: one column, or a single row. Negative entries are
/// allowed (projection inputs can be any real vector).
pub fn parse_vector_csv(text: &str, name: &str) -> Result<Vec<f64>> {
    let rows = parse_grid(text, name)?;
    if rows[0].len() == 1 {
        Ok(rows.into_iter().map(|r| r[0]).collect())
    } else if rows.len() == 1 {
        Ok(rows.into_iter().next().unwrap())
    } else {
        Err(Error::Format {
            path: name.to_string(),
            message: format!(
                "expected a vector (one row or one column), found {}x{}",
                rows.len(),
                rows[0].len()
            ),
        })
    }
}

/// Parses constraint rows `index,kind,alpha_lo,alpha_hi` with kind one of
/// eq, interval, free. Indices are 0-based ordinals into the `rank`
/// columns/rows being constrained; unlisted indices stay unconstrained.
/// `dim` is the length of the constrained vectors.
pub fn parse_constraints_csv(
    text: &str,
    name: &str,
    rank: usize,
    dim: usize,
) -> Result<Vec<SparsityConstraint>> {
    let mut out = vec![SparsityConstraint::unconstrained(dim); rank];
    let mut seen = vec![false; rank];
    let mut any = false;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        let row_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        any = true;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::RaggedRow {
                path: name.to_string(),
                row: row_no,
                expected: 4,
                found: fields.len(),
            });
        }
        let index: usize = fields[0].trim().parse().map_err(|_| Error::Format {
            path: name.to_string(),
            message: format!("row {row_no}: bad index {:?}", fields[0].trim()),
        })?;
        if index >= rank {
            return Err(Error::Format {
                path: name.to_string(),
                message: format!("row {row_no}: index {index} outside rank {rank}"),
            });
        }
        if seen[index] {
            return Err(Error::Format {
                path: name.to_string(),
                message: format!("row {row_no}: duplicate index {index}"),
            });
        }
        seen[index] = true;
        let lo = parse_cell(fields[2], name, row_no, 3)?;
        let hi = parse_cell(fields[3], name, row_no, 4)?;
        let kind = fields[1].trim();
        out[index] = match kind {
            "eq" => {
                if lo != hi {
                    return Err(Error::Format {
                        path: name.to_string(),
                        message: format!("row {row_no}: eq constraint with {lo} != {hi}"),
                    });
                }
                SparsityConstraint::equality(lo, dim)?
            }
            "interval" => SparsityConstraint::interval(lo, hi, dim)?,
            "free" => {
                if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                    return Err(Error::Format {
                        path: name.to_string(),
                        message: format!("row {row_no}: bad alpha range [{lo}, {hi}]"),
                    });
                }
                SparsityConstraint::unconstrained(dim)
            }
            other => {
                return Err(Error::Format {
                    path: name.to_string(),
                    message: format!(
                        "row {row_no}: unknown kind {other:?} (expected eq, interval or free)"
                    ),
                })
            }
        };
    }
    if !any {
        return Err(Error::Format {
            path: name.to_string(),
            message: "empty constraint file".into(),
        });
    }
    Ok(out)
}

/// Parses a trace file written by [`trace_to_csv`].
pub fn parse_trace_csv(text: &str, name: &str) -> Result<ConvergenceTrace> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end_matches('\r') == TRACE_HEADER => {}
        _ => {
            return Err(Error::Format {
                path: name.to_string(),
                message: format!("missing header {TRACE_HEADER:?}"),
            })
        }
    }
    let mut trace = ConvergenceTrace::new();
    let mut last_updates = 0u64;
    for (idx, line) in lines.enumerate() {
        let line = line.trim_end_matches('\r');
        let row_no = idx + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::RaggedRow {
                path: name.to_string(),
                row: row_no,
                expected: 3,
                found: fields.len(),
            });
        }
        let updates: u64 = fields[0].trim().parse().map_err(|_| Error::Format {
            path: name.to_string(),
            message: format!("row {row_no}: bad update count {:?}", fields[0].trim()),
        })?;
        let elapsed = parse_cell(fields[1], name, row_no, 2)?;
        let error = parse_cell(fields[2], name, row_no, 3)?;
        if error < 0.0 {
            return Err(Error::Format {
                path: name.to_string(),
                message: format!("row {row_no}: negative error {error}"),
            });
        }
        if !trace.records.is_empty() && updates <= last_updates {
            return Err(Error::Format {
                path: name.to_string(),
                message: format!("row {row_no}: update counts must increase"),
            });
        }
        last_updates = updates;
        trace.records.push(crate::solver::TraceRecord {
            updates,
            elapsed_s: elapsed,
            error,
        });
    }
    Ok(trace)
}

/// Serializes a matrix as headerless CSV, one line per row.
pub fn matrix_to_csv(m: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&fmt_f64(m.get(i, j)));
        }
        out.push('\n');
    }
    out
}

/// Serializes a trace with its header line.
pub fn trace_to_csv(trace: &ConvergenceTrace) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for rec in &trace.records {
        out.push_str(&format!(
            "{},{},{}\n",
            rec.updates,
            fmt_f64(rec.elapsed_s),
            fmt_f64(rec.error)
        ));
    }
    out
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_matrix_csv(&text, &path.display().to_string())
}

pub fn save_matrix(m: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, matrix_to_csv(m))?;
    Ok(())
}

pub fn load_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_vector_csv(&text, &path.display().to_string())
}

pub fn load_constraints(
    path: impl AsRef<Path>,
    rank: usize,
    dim: usize,
) -> Result<Vec<SparsityConstraint>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_constraints_csv(&text, &path.display().to_string(), rank, dim)
}

pub fn save_trace(trace: &ConvergenceTrace, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, trace_to_csv(trace))?;
    Ok(())
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<ConvergenceTrace> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_trace_csv(&text, &path.display().to_string())
}

/// Serializes constraint rows in the `index,kind,alpha_lo,alpha_hi` format.
pub fn constraints_to_csv(constraints: &[SparsityConstraint]) -> String {
    let mut out = String::new();
    for (i, c) in constraints.iter().enumerate() {
        let kind = match c.kind() {
            ConstraintKind::Unconstrained => "free",
            ConstraintKind::Equality => "eq",
            ConstraintKind::Interval => "interval",
        };
        out.push_str(&format!(
            "{i},{kind},{},{}\n",
            fmt_f64(c.alpha_lo()),
            fmt_f64(c.alpha_hi())
        ));
    }
    out
}

/// Renders the columns of W as a grid of grayscale tiles in binary PGM (P5).
///
/// Each column is reshaped column-major into a `tile.0 x tile.1` image and
/// min-max normalized on its own, so the brightest pixel of every tile is
/// 255 and the darkest 0 (constant tiles render black). Tiles are laid out
/// row-major on the grid with 1-pixel white separators; unused grid cells
/// stay black. Output depends only on the arguments.
pub fn render_feature_sheet(
    w: &DenseMatrix,
    tile: (usize, usize),
    grid: (usize, usize),
) -> Result<Vec<u8>> {
    let (tile_rows, tile_cols) = tile;
    let (grid_rows, grid_cols) = grid;
    if tile_rows == 0 || tile_cols == 0 || grid_rows == 0 || grid_cols == 0 {
        return Err(Error::Dimension("tile and grid sides must be positive".into()));
    }
    if tile_rows * tile_cols != w.rows() {
        return Err(Error::Dimension(format!(
            "tile {tile_rows}x{tile_cols} cannot hold features of length {}",
            w.rows()
        )));
    }
    if grid_rows * grid_cols < w.cols() {
        return Err(Error::Dimension(format!(
            "grid {grid_rows}x{grid_cols} cannot hold {} features",
            w.cols()
        )));
    }

    let width = grid_cols * tile_cols + (grid_cols - 1);
    let height = grid_rows * tile_rows + (grid_rows - 1);
    // White canvas: the 1-pixel gutters between tiles stay at 255.
    let mut pixels = vec![255u8; width * height];

    for cell in 0..grid_rows * grid_cols {
        let gi = cell / grid_cols;
        let gj = cell % grid_cols;
        let top = gi * (tile_rows + 1);
        let left = gj * (tile_cols + 1);

        if cell < w.cols() {
            let col = w.column(cell);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &v in col {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let span = hi - lo;
            for tj in 0..tile_cols {
                for ti in 0..tile_rows {
                    let v = col[ti + tj * tile_rows];
                    let shade = if span > 0.0 {
                        ((v - lo) / span * 255.0).round() as u8
                    } else {
                        0
                    };
                    pixels[(top + ti) * width + left + tj] = shade;
                }
            }
        } else {
            for ti in 0..tile_rows {
                for tj in 0..tile_cols {
                    pixels[(top + ti) * width + left + tj] = 0;
                }
            }
        }
    }

    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(&pixels);
    Ok(out)
}

pub fn render_features(
    w: &DenseMatrix,
    tile: (usize, usize),
    grid: (usize, usize),
    path: impl AsRef<Path>,
) -> Result<()> {
    let bytes = render_feature_sheet(w, tile, grid)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}
