//! Column-major dense matrices and the few linear-algebra kernels the
//! solvers need.
//!
//! Everything is `f64`. Products accumulate in a fixed sequential order so
//! repeated runs are bit-identical.

use crate::error::{Error, Result};

/// Dense matrix stored column-major: entry `(i, j)` lives at `data[i + j * rows]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i + i * n] = 1.0;
        }
        m
    }

    /// Builds a matrix from column-major data.
    pub fn from_column_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Builds a matrix from row slices (each inner slice is one row).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("rows of unequal length".into()));
        }
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    /// Builds a single-column matrix from a vector.
    pub fn from_vector(v: &[f64]) -> Self {
        DenseMatrix {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Raw column-major data.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i + j * self.rows]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i + j * self.rows] = v;
    }

    /// Contiguous view of column `j`.
    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Mutable view of column `j`.
    #[inline]
    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Row `i` gathered into a vector (rows are strided in column-major storage).
    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// `self * other`, accumulated column by column in a fixed order.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let out_col = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for k in 0..self.cols {
                let b_kj = other.get(k, j);
                if b_kj == 0.0 {
                    continue;
                }
                let a_col = &self.data[k * self.rows..(k + 1) * self.rows];
                for (o, &a) in out_col.iter_mut().zip(a_col) {
                    *o += a * b_kj;
                }
            }
        }
        Ok(out)
    }

    /// True when every entry is `>= 0` (NaN counts as a violation).
    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&v| v >= 0.0)
    }

    /// Errors with the first offending entry when the matrix has a negative
    /// or non-finite value.
    pub fn validate_nonnegative(&self, name: &str) -> Result<()> {
        for j in 0..self.cols {
            for i in 0..self.rows {
                let v = self.get(i, j);
                if !v.is_finite() {
                    return Err(Error::NonFiniteEntry {
                        path: name.to_string(),
                        row: i + 1,
                        col: j + 1,
                    });
                }
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
        Ok(())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute entry-wise difference; shapes must match.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Reconstruction error `||X - WH||_F`.
pub fn frobenius_error(x: &DenseMatrix, w: &DenseMatrix, h: &DenseMatrix) -> Result<f64> {
    if w.cols() != h.rows() || x.rows() != w.rows() || x.cols() != h.cols() {
        return Err(Error::Dimension(format!(
            "frobenius_error: X is {}x{}, WH is {}x{} by {}x{}",
            x.rows(),
            x.cols(),
            w.rows(),
            w.cols(),
            h.rows(),
            h.cols()
        )));
    }
    let mut sum = 0.0;
    // One reconstructed column at a time keeps the accumulation order fixed
    // without materializing WH.
    let mut col = vec![0.0; x.rows()];
    for j in 0..x.cols() {
        col.fill(0.0);
        for k in 0..w.cols() {
            let h_kj = h.get(k, j);
            if h_kj == 0.0 {
                continue;
            }
            for (c, &wv) in col.iter_mut().zip(w.column(k)) {
                *c += wv * h_kj;
            }
        }
        for (i, &c) in col.iter().enumerate() {
            let d = x.get(i, j) - c;
            sum += d * d;
        }
    }
    Ok(sum.sqrt())
}

/// Reconstruction error `||X - WDH||_F` for the three-factor model.
pub fn frobenius_error_wdh(
    x: &DenseMatrix,
    w: &DenseMatrix,
    d: &DenseMatrix,
    h: &DenseMatrix,
) -> Result<f64> {
    let dh = d.matmul(h)?;
    frobenius_error(x, w, &dh)
}

/// Rescales every column of `w` to unit L2 norm, returning the normalized
/// matrix and the original norms. Rescaling row `j` of H by `scales[j]`
/// preserves the product WH.
pub fn column_normalize(w: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>)> {
    let mut out = w.clone();
    let mut scales = Vec::with_capacity(w.cols());
    for j in 0..w.cols() {
        let norm = out.column(j).iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::DegenerateColumn { index: j });
        }
        for v in out.column_mut(j) {
            *v /= norm;
        }
        scales.push(norm);
    }
    Ok((out, scales))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = 0.0;
                for k in 0..a.cols() {
                    s += a.get(i, k) * b.get(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    fn deterministic_fill(m: &mut DenseMatrix, mut state: u64) -> u64 {
        for j in 0..m.cols() {
            for i in 0..m.rows() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                m.set(i, j, (state >> 11) as f64 / (1u64 << 53) as f64);
            }
        }
        state
    }

    #[test]
    fn matmul_identity() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let i2 = DenseMatrix::identity(2);
        assert_eq!(i2.matmul(&a).unwrap(), a);
    }

    #[test]
    fn matmul_ones() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.rows(), 1);
        assert_eq!(c.cols(), 1);
        assert_eq!(c.get(0, 0), 2.0);
    }

    #[test]
    fn matmul_matches_naive_triple_loop() {
        let mut a = DenseMatrix::zeros(3, 4);
        let mut b = DenseMatrix::zeros(4, 2);
        let s = deterministic_fill(&mut a, 7);
        deterministic_fill(&mut b, s);
        let fast = a.matmul(&b).unwrap();
        let slow = naive_matmul(&a, &b);
        assert_eq!(fast.max_abs_diff(&slow), 0.0);
    }

    #[test]
    fn matmul_shape_mismatch() {
        let a = DenseMatrix::zeros(2, 3);
        let b = DenseMatrix::zeros(2, 3);
        assert!(matches!(a.matmul(&b), Err(Error::Dimension(_))));
    }

    #[test]
    fn matmul_is_deterministic() {
        let mut a = DenseMatrix::zeros(5, 6);
        let mut b = DenseMatrix::zeros(6, 4);
        let s = deterministic_fill(&mut a, 99);
        deterministic_fill(&mut b, s);
        let c1 = a.matmul(&b).unwrap();
        let c2 = a.matmul(&b).unwrap();
        assert_eq!(c1.data(), c2.data());
    }

    #[test]
    fn frobenius_error_exact_factorization_is_zero() {
        let w = DenseMatrix::from_rows(&[vec![1.0, 0.5], vec![0.25, 2.0]]).unwrap();
        let h = DenseMatrix::from_rows(&[vec![0.5, 1.0], vec![1.5, 0.75]]).unwrap();
        let x = w.matmul(&h).unwrap();
        assert_eq!(frobenius_error(&x, &w, &h).unwrap(), 0.0);
    }

    #[test]
    fn frobenius_error_unit_residual() {
        let x = DenseMatrix::from_rows(&[vec![1.0]]).unwrap();
        let w = DenseMatrix::from_rows(&[vec![0.0]]).unwrap();
        let h = DenseMatrix::from_rows(&[vec![0.0]]).unwrap();
        assert_eq!(frobenius_error(&x, &w, &h).unwrap(), 1.0);
    }

    #[test]
    fn frobenius_error_matches_elementwise_oracle() {
        let mut x = DenseMatrix::zeros(5, 5);
        let mut w = DenseMatrix::zeros(5, 5);
        let mut h = DenseMatrix::zeros(5, 5);
        let s = deterministic_fill(&mut x, 3);
        let s = deterministic_fill(&mut w, s);
        deterministic_fill(&mut h, s);

        let wh = naive_matmul(&w, &h);
        let mut sum = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                let d = x.get(i, j) - wh.get(i, j);
                sum += d * d;
            }
        }
        let expect = sum.sqrt();
        let got = frobenius_error(&x, &w, &h).unwrap();
        assert!((got - expect).abs() <= 1e-12, "got {got}, expect {expect}");
    }

    #[test]
    fn column_normalize_three_four_five() {
        let w = DenseMatrix::from_rows(&[vec![3.0], vec![4.0]]).unwrap();
        let (n, scales) = column_normalize(&w).unwrap();
        assert!((n.get(0, 0) - 0.6).abs() < 1e-15);
        assert!((n.get(1, 0) - 0.8).abs() < 1e-15);
        assert!((scales[0] - 5.0).abs() < 1e-15);
    }

    #[test]
    fn column_normalize_unit_column_unchanged() {
        let w = DenseMatrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap();
        let (n, scales) = column_normalize(&w).unwrap();
        assert_eq!(n, w);
        assert_eq!(scales[0], 1.0);
    }

    #[test]
    fn column_normalize_zero_column_errors() {
        let w = DenseMatrix::zeros(3, 2);
        assert!(matches!(
            column_normalize(&w),
            Err(Error::DegenerateColumn { index: 0 })
        ));
    }

    #[test]
    fn column_normalize_preserves_product() {
        let mut w = DenseMatrix::zeros(4, 3);
        let mut h = DenseMatrix::zeros(3, 5);
        let s = deterministic_fill(&mut w, 11);
        deterministic_fill(&mut h, s);

        let product = w.matmul(&h).unwrap();
        let (wn, scales) = column_normalize(&w).unwrap();
        for j in 0..wn.cols() {
            let norm: f64 = wn.column(j).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() <= 1e-12);
        }
        let mut h_scaled = h.clone();
        for (k, &s) in scales.iter().enumerate() {
            for j in 0..h.cols() {
                h_scaled.set(k, j, h.get(k, j) * s);
            }
        }
        let product2 = wn.matmul(&h_scaled).unwrap();
        let rel = product.max_abs_diff(&product2) / product.frobenius_norm().max(1.0);
        assert!(rel <= 1e-12);
    }
}
