//! Multiplicative update rules for the unconstrained factors.
//!
//! The rules rescale element-wise, so nonnegativity is preserved without a
//! projection step and exact zeros stay zero. Each rule keeps the halved
//! squared reconstruction error non-increasing per sweep.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Knobs shared by all multiplicative updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateConfig {
    /// Guard added to denominators to avoid division by zero.
    pub epsilon: f64,
    /// Multiplicative sweeps per call.
    pub inner_repeats: usize,
}

impl Default for UpdateConfig {
    fn default() -> Self {
        UpdateConfig {
            epsilon: 1e-9,
            inner_repeats: 1,
        }
    }
}

impl UpdateConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(Error::Range(format!(
                "denominator guard must be positive, got {}",
                self.epsilon
            )));
        }
        if self.inner_repeats == 0 {
            return Err(Error::Range("inner_repeats must be at least 1".into()));
        }
        Ok(())
    }
}

/// H <- H .* (W'X) ./ (W'WH + eps), repeated `inner_repeats` times.
///
/// W'X and W'W are computed once per call; only W'WH changes across sweeps.
pub fn nnls_mult(
    x: &DenseMatrix,
    w: &DenseMatrix,
    h: &DenseMatrix,
    cfg: &UpdateConfig,
) -> Result<DenseMatrix> {
    cfg.validate()?;
    if w.rows() != x.rows() || w.cols() != h.rows() || h.cols() != x.cols() {
        return Err(Error::Dimension(format!(
            "nnls_mult: X {}x{}, W {}x{}, H {}x{}",
            x.rows(),
            x.cols(),
            w.rows(),
            w.cols(),
            h.rows(),
            h.cols()
        )));
    }
    let wt = w.transpose();
    let wtx = wt.matmul(x)?;
    let wtw = wt.matmul(w)?;

    let mut h = h.clone();
    for _ in 0..cfg.inner_repeats {
        let denom = wtw.matmul(&h)?;
        for j in 0..h.cols() {
            for i in 0..h.rows() {
                let v = h.get(i, j) * wtx.get(i, j) / (denom.get(i, j) + cfg.epsilon);
                h.set(i, j, v);
            }
        }
    }
    debug_assert!(h.is_nonnegative());
    Ok(h)
}

/// W <- W .* (XH') ./ (WHH' + eps), the transpose-symmetric rule.
///
/// Callers that need unit basis columns follow this with
/// [`crate::matrix::column_normalize`] and rescale the rows of H by the
/// returned norms.
pub fn nnls_mult_w(
    x: &DenseMatrix,
    w: &DenseMatrix,
    h: &DenseMatrix,
    cfg: &UpdateConfig,
) -> Result<DenseMatrix> {
    cfg.validate()?;
    if w.rows() != x.rows() || w.cols() != h.rows() || h.cols() != x.cols() {
        return Err(Error::Dimension(format!(
            "nnls_mult_w: X {}x{}, W {}x{}, H {}x{}",
            x.rows(),
            x.cols(),
            w.rows(),
            w.cols(),
            h.rows(),
            h.cols()
        )));
    }
    let ht = h.transpose();
    let xht = x.matmul(&ht)?;
    let hht = h.matmul(&ht)?;

    let mut w = w.clone();
    for _ in 0..cfg.inner_repeats {
        let denom = w.matmul(&hht)?;
        for j in 0..w.cols() {
            for i in 0..w.rows() {
                let v = w.get(i, j) * xht.get(i, j) / (denom.get(i, j) + cfg.epsilon);
                w.set(i, j, v);
            }
        }
    }
    debug_assert!(w.is_nonnegative());
    Ok(w)
}

/// D <- D .* (W'XH') ./ (W'W D HH' + eps) for the three-factor model
/// X ~ WDH. With `diagonal_only`, off-diagonal entries are left untouched
/// (and must be zero on input).
pub fn diag_mult(
    x: &DenseMatrix,
    w: &DenseMatrix,
    h: &DenseMatrix,
    d: &DenseMatrix,
    diagonal_only: bool,
    cfg: &UpdateConfig,
) -> Result<DenseMatrix> {
    cfg.validate()?;
    let r = w.cols();
    if d.rows() != r || d.cols() != r || h.rows() != r || w.rows() != x.rows() || h.cols() != x.cols()
    {
        return Err(Error::Dimension(format!(
            "diag_mult: X {}x{}, W {}x{}, D {}x{}, H {}x{}",
            x.rows(),
            x.cols(),
            w.rows(),
            w.cols(),
            d.rows(),
            d.cols(),
            h.rows(),
            h.cols()
        )));
    }
    if diagonal_only {
        for j in 0..r {
            for i in 0..r {
                if i != j && d.get(i, j) != 0.0 {
                    return Err(Error::Constraint(format!(
                        "diagonal_only update, but D[{i},{j}] = {}",
                        d.get(i, j)
                    )));
                }
            }
        }
    }

    // The products around D do not change across sweeps.
    let wt = w.transpose();
    let ht = h.transpose();
    let numer = wt.matmul(x)?.matmul(&ht)?;
    let wtw = wt.matmul(w)?;
    let hht = h.matmul(&ht)?;

    let mut d = d.clone();
    for _ in 0..cfg.inner_repeats {
        let denom = wtw.matmul(&d)?.matmul(&hht)?;
        for j in 0..r {
            for i in 0..r {
                if diagonal_only && i != j {
                    continue;
                }
                let v = d.get(i, j) * numer.get(i, j) / (denom.get(i, j) + cfg.epsilon);
                d.set(i, j, v);
            }
        }
    }
    debug_assert!(d.is_nonnegative());
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{frobenius_error, frobenius_error_wdh};
    use crate::rng::SeededRng;

    fn random_matrix(rows: usize, cols: usize, rng: &mut SeededRng) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.set(i, j, rng.uniform() + 0.05);
            }
        }
        m
    }

    #[test]
    fn nnls_mult_fixed_point() {
        let mut rng = SeededRng::new(3);
        let w = random_matrix(5, 2, &mut rng);
        let h = random_matrix(2, 4, &mut rng);
        let x = w.matmul(&h).unwrap();
        let h2 = nnls_mult(&x, &w, &h, &UpdateConfig::default()).unwrap();
        assert!(h.max_abs_diff(&h2) <= 1e-8);
    }

    #[test]
    fn nnls_mult_identity_basis_copies_x() {
        let w = DenseMatrix::identity(2);
        let x = DenseMatrix::identity(2);
        let h = DenseMatrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let h2 = nnls_mult(&x, &w, &x.clone(), &UpdateConfig::default()).unwrap();
        // With W = I the rule becomes H .* X ./ (H + eps); starting from H = X
        // it is a fixed point, and starting from the uniform H one sweep lands
        // on X up to the guard.
        let h3 = nnls_mult(&x, &w, &h, &UpdateConfig::default()).unwrap();
        assert!(h2.max_abs_diff(&x) <= 1e-8);
        assert!(h3.max_abs_diff(&x) <= 1e-8);
    }

    #[test]
    fn nnls_mult_objective_non_increasing() {
        let mut rng = SeededRng::new(17);
        let x = random_matrix(6, 4, &mut rng);
        let w = random_matrix(6, 2, &mut rng);
        let mut h = random_matrix(2, 4, &mut rng);
        let mut prev = frobenius_error(&x, &w, &h).unwrap();
        for _ in 0..25 {
            h = nnls_mult(&x, &w, &h, &UpdateConfig::default()).unwrap();
            let err = frobenius_error(&x, &w, &h).unwrap();
            assert!(err <= prev + 1e-10 * prev.max(1.0), "{err} > {prev}");
            prev = err;
        }
    }

    #[test]
    fn nnls_mult_w_fixed_point_and_monotone() {
        let mut rng = SeededRng::new(23);
        let w = random_matrix(5, 3, &mut rng);
        let h = random_matrix(3, 6, &mut rng);
        let x = w.matmul(&h).unwrap();
        let w2 = nnls_mult_w(&x, &w, &h, &UpdateConfig::default()).unwrap();
        assert!(w.max_abs_diff(&w2) <= 1e-8);

        let x = random_matrix(5, 6, &mut rng);
        let mut w = random_matrix(5, 3, &mut rng);
        let mut prev = frobenius_error(&x, &w, &h).unwrap();
        for _ in 0..25 {
            w = nnls_mult_w(&x, &w, &h, &UpdateConfig::default()).unwrap();
            let err = frobenius_error(&x, &w, &h).unwrap();
            assert!(err <= prev + 1e-10 * prev.max(1.0));
            prev = err;
        }
    }

    #[test]
    fn nnls_mult_preserves_zeros() {
        let mut rng = SeededRng::new(29);
        let x = random_matrix(4, 3, &mut rng);
        let w = random_matrix(4, 2, &mut rng);
        let mut h = random_matrix(2, 3, &mut rng);
        h.set(1, 2, 0.0);
        let h2 = nnls_mult(&x, &w, &h, &UpdateConfig::default()).unwrap();
        assert_eq!(h2.get(1, 2), 0.0);
    }

    #[test]
    fn nnls_mult_shape_mismatch() {
        let x = DenseMatrix::zeros(3, 3);
        let w = DenseMatrix::zeros(3, 2);
        let h = DenseMatrix::zeros(2, 4);
        assert!(matches!(
            nnls_mult(&x, &w, &h, &UpdateConfig::default()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn diag_mult_fixed_point() {
        let mut rng = SeededRng::new(31);
        let w = random_matrix(5, 2, &mut rng);
        let h = random_matrix(2, 5, &mut rng);
        let mut d = DenseMatrix::zeros(2, 2);
        d.set(0, 0, 1.3);
        d.set(1, 1, 0.7);
        let x = w.matmul(&d).unwrap().matmul(&h).unwrap();
        let d2 = diag_mult(&x, &w, &h, &d, true, &UpdateConfig::default()).unwrap();
        assert!(d.max_abs_diff(&d2) <= 1e-8);
    }

    #[test]
    fn diag_mult_rank_one_recovery() {
        let w = DenseMatrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap();
        let h = DenseMatrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let x = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let d = DenseMatrix::from_rows(&[vec![1.0]]).unwrap();
        let d2 = diag_mult(&x, &w, &h, &d, true, &UpdateConfig::default()).unwrap();
        assert!((d2.get(0, 0) - 2.0).abs() <= 1e-8);
    }

    #[test]
    fn diag_mult_monotone_and_keeps_off_diagonal_zero() {
        let mut rng = SeededRng::new(37);
        let x = random_matrix(5, 5, &mut rng);
        let w = random_matrix(5, 2, &mut rng);
        let h = random_matrix(2, 5, &mut rng);
        let mut d = DenseMatrix::zeros(2, 2);
        d.set(0, 0, 0.9);
        d.set(1, 1, 1.1);
        let mut prev = frobenius_error_wdh(&x, &w, &d, &h).unwrap();
        for _ in 0..25 {
            d = diag_mult(&x, &w, &h, &d, true, &UpdateConfig::default()).unwrap();
            let err = frobenius_error_wdh(&x, &w, &d, &h).unwrap();
            assert!(err <= prev + 1e-10 * prev.max(1.0));
            prev = err;
            assert_eq!(d.get(0, 1), 0.0);
            assert_eq!(d.get(1, 0), 0.0);
        }
    }

    #[test]
    fn diag_mult_rejects_nonzero_off_diagonal_in_diagonal_mode() {
        let x = DenseMatrix::zeros(2, 2);
        let w = DenseMatrix::zeros(2, 2);
        let h = DenseMatrix::zeros(2, 2);
        let mut d = DenseMatrix::identity(2);
        d.set(0, 1, 0.5);
        assert!(matches!(
            diag_mult(&x, &w, &h, &d, true, &UpdateConfig::default()),
            Err(Error::Constraint(_))
        ));
    }

    #[test]
    fn update_config_validation() {
        let bad = UpdateConfig {
            epsilon: 0.0,
            inner_repeats: 1,
        };
        assert!(bad.validate().is_err());
        let bad = UpdateConfig {
            epsilon: 1e-9,
            inner_repeats: 0,
        };
        assert!(bad.validate().is_err());
    }
}
