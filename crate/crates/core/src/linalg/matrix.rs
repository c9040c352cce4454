use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Largest supported dimension for any dense matrix.
pub const MAX_DIM: usize = 2000;

/// Row-major dense matrix of `f64`.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows <= MAX_DIM && cols <= MAX_DIM, "dimension cap exceeded");
        DenseMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from row-major data; rejects wrong lengths and non-finite entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows > MAX_DIM || cols > MAX_DIM {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} exceeds the dimension cap {MAX_DIM}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::DimensionMismatch(format!(
                "non-finite entry at ({}, {})",
                i / cols.max(1),
                i % cols.max(1)
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Builds a matrix from nested rows. All rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::from_row_major(r, c, rows.concat())
    }

    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows);
            for (i, &v) in col.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    /// Keeps the listed columns, in order.
    pub fn select_columns(&self, idx: &[usize]) -> DenseMatrix {
        let mut m = Self::zeros(self.rows, idx.len());
        for (k, &j) in idx.iter().enumerate() {
            for i in 0..self.rows {
                m[(i, k)] = self[(i, j)];
            }
        }
        m
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self` times `x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec shape mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ` times `x`.
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, x.len(), "tr_matvec shape mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        out
    }

    /// `yᵀ · self · x`.
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        dot(y, &self.matvec(x))
    }

    /// `xᵀ · self · x`.
    pub fn quad(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    pub fn add(&self, other: &DenseMatrix) -> DenseMatrix {
        self.lin_comb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        self.lin_comb(1.0, other, -1.0)
    }

    /// `a·self + b·other`.
    pub fn lin_comb(&self, a: f64, other: &DenseMatrix, b: f64) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect();
        DenseMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: f64) -> DenseMatrix {
        DenseMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| s * v).collect() }
    }

    /// `(self + selfᵀ)/2`.
    pub fn sym_part(&self) -> DenseMatrix {
        self.lin_comb(0.5, &self.transpose(), 0.5)
    }

    /// `Bᵀ · self · B`.
    pub fn congruence(&self, b: &DenseMatrix) -> DenseMatrix {
        b.transpose().matmul(&self.matmul(b))
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_diag(&self) -> f64 {
        (0..self.rows.min(self.cols)).fold(0.0, |m, i| m.max(self[(i, i)].abs()))
    }

    /// `‖A − Aᵀ‖_F / ‖A‖_F` (zero for the zero matrix).
    pub fn asymmetry(&self) -> f64 {
        assert!(self.is_square());
        let f = self.frobenius_norm();
        if f == 0.0 {
            return 0.0;
        }
        self.sub(&self.transpose()).frobenius_norm() / f
    }

    /// Stacks `[[a, b], [c, d]]` into one matrix.
    pub fn block(a: &DenseMatrix, b: &DenseMatrix, c: &DenseMatrix, d: &DenseMatrix) -> DenseMatrix {
        assert_eq!(a.rows, b.rows);
        assert_eq!(c.rows, d.rows);
        assert_eq!(a.cols, c.cols);
        assert_eq!(b.cols, d.cols);
        let (n, m) = (a.rows, c.rows);
        let (p, q) = (a.cols, b.cols);
        let mut out = Self::zeros(n + m, p + q);
        for i in 0..n {
            for j in 0..p {
                out[(i, j)] = a[(i, j)];
            }
            for j in 0..q {
                out[(i, p + j)] = b[(i, j)];
            }
        }
        for i in 0..m {
            for j in 0..p {
                out[(n + i, j)] = c[(i, j)];
            }
            for j in 0..q {
                out[(n + i, p + j)] = d[(i, j)];
            }
        }
        out
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "dot length mismatch");
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn add(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

pub fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn scale(s: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| s * v).collect()
}

/// `y += a·x`.
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Norm induced by the Gram matrix `m`, with negative roundoff clamped to zero.
pub fn gram_norm(m: &DenseMatrix, x: &[f64]) -> f64 {
    m.quad(x).max(0.0).sqrt()
}
