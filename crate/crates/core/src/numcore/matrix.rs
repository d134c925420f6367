use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape {
                op: "DenseMatrix::from_vec",
                expected: format!("{} elements ({rows}x{cols})", rows * cols),
                got: format!("{} elements", data.len()),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(
                "DenseMatrix::from_vec",
                format!("non-finite entry at flat index {i}"),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Shape {
                    op: "DenseMatrix::from_rows",
                    expected: format!("{cols} columns"),
                    got: format!("{} columns in row {i}", r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Copy the given rows, in order, into a new matrix.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// Set every entry of the given columns to zero.
    pub fn zero_columns(&mut self, cols: &[usize]) {
        for r in 0..self.rows {
            let row = self.row_mut(r);
            for &c in cols {
                row[c] = 0.0;
            }
        }
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self · rhs + bias` (bias broadcast over rows).
    ///
    /// Zero entries of `self` are skipped, which makes the product cheap for
    /// the one-hot heavy input matrices this crate deals with.
    pub fn matmul_bias(&self, rhs: &DenseMatrix, bias: &[f64]) -> Result<DenseMatrix> {
        if self.cols != rhs.rows || bias.len() != rhs.cols {
            return Err(Error::Shape {
                op: "matmul_bias",
                expected: format!("lhs cols == {} and bias len == {}", rhs.rows, rhs.cols),
                got: format!("lhs cols {}, bias len {}", self.cols, bias.len()),
            });
        }
        let n = rhs.cols;
        let mut out = DenseMatrix::zeros(self.rows, n);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            out_row.copy_from_slice(bias);
            for (k, &x) in self.row(i).iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                let w_row = &rhs.data[k * n..(k + 1) * n];
                for (o, &w) in out_row.iter_mut().zip(w_row) {
                    *o += x * w;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · rhs`, accumulated into `out` (shape `self.cols × rhs.cols`).
    pub(crate) fn add_transpose_matmul(&self, rhs: &DenseMatrix, out: &mut DenseMatrix) {
        debug_assert_eq!(self.rows, rhs.rows);
        debug_assert_eq!(out.shape(), (self.cols, rhs.cols));
        let n = rhs.cols;
        for i in 0..self.rows {
            let g_row = rhs.row(i);
            for (k, &x) in self.row(i).iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                let o_row = &mut out.data[k * n..(k + 1) * n];
                for (o, &g) in o_row.iter_mut().zip(g_row) {
                    *o += x * g;
                }
            }
        }
    }

    /// `self · rhsᵀ`.
    pub(crate) fn matmul_transpose(&self, rhs: &DenseMatrix) -> DenseMatrix {
        debug_assert_eq!(self.cols, rhs.cols);
        let mut out = DenseMatrix::zeros(self.rows, rhs.rows);
        for i in 0..self.rows {
            let a = self.row(i);
            for k in 0..rhs.rows {
                let b = rhs.row(k);
                out.data[i * rhs.rows + k] = a.iter().zip(b).map(|(x, y)| x * y).sum();
            }
        }
        out
    }
}
