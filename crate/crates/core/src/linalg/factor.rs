use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

/// Symmetry tolerance accepted by [`factor_spd`].
pub const SPD_SYMMETRY_TOL: f64 = 1e-12;
/// Relative pivot floor shared by the Cholesky and LU factorizations.
pub const PIVOT_REL_TOL: f64 = 1e-14;

/// Cholesky factor `M = L Lᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdFactorization {
    l: DenseMatrix,
}

/// Factors a symmetric positive definite matrix.
pub fn factor_spd(m: &DenseMatrix) -> Result<SpdFactorization> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", m.rows(), m.cols())));
    }
    let asym = m.asymmetry();
    if asym > SPD_SYMMETRY_TOL {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let n = m.rows();
    let floor = n as f64 * PIVOT_REL_TOL * m.max_diag();
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) {
            return Err(Error::NotSpd { index: j, pivot: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            // Average the two triangles so tiny asymmetries do not bias the factor.
            let mut s = 0.5 * (m[(i, j)] + m[(j, i)]);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(SpdFactorization { l })
}

impl SpdFactorization {
    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn lower(&self) -> &DenseMatrix {
        &self.l
    }

    /// Solves `L y = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    /// Solves `Lᵀ x = y`.
    pub fn solve_upper(&self, y: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(y.len(), n);
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    /// Solves `M x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// `M⁻¹ B` column by column.
    pub fn solve_matrix(&self, b: &DenseMatrix) -> DenseMatrix {
        let cols: Vec<Vec<f64>> = b.columns().iter().map(|c| self.solve(c)).collect();
        DenseMatrix::from_columns(b.rows(), &cols)
    }

    /// `L⁻¹ A L⁻ᵀ`, the congruence that turns `(A, M)` into a standard problem.
    pub fn whiten(&self, a: &DenseMatrix) -> DenseMatrix {
        let n = self.dim();
        assert_eq!((a.rows(), a.cols()), (n, n));
        // X = L⁻¹A column by column; then L⁻¹Xᵀ = (L⁻¹AL⁻ᵀ)ᵀ.
        let la: Vec<Vec<f64>> = a.columns().iter().map(|c| self.solve_lower(c)).collect();
        let la = DenseMatrix::from_columns(n, &la).transpose();
        let cols: Vec<Vec<f64>> = la.columns().iter().map(|c| self.solve_lower(c)).collect();
        DenseMatrix::from_columns(n, &cols).transpose()
    }

    /// Applies `L⁻ᵀ` to each column.
    pub fn back_transform(&self, y: &DenseMatrix) -> DenseMatrix {
        let cols: Vec<Vec<f64>> = y.columns().iter().map(|c| self.solve_upper(c)).collect();
        DenseMatrix::from_columns(self.dim(), &cols)
    }
}

/// Row-pivoted LU factorization `P A = L U`.
#[derive(Debug, Clone)]
pub struct LuFactorization {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

/// Factors a square matrix with partial pivoting.
pub fn factor_lu(a: &DenseMatrix) -> Result<LuFactorization> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", a.rows(), a.cols())));
    }
    let n = a.rows();
    let floor = n as f64 * PIVOT_REL_TOL * a.max_abs();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut p = k;
        let mut best = lu[(k, k)].abs();
        for i in k + 1..n {
            if lu[(i, k)].abs() > best {
                best = lu[(i, k)].abs();
                p = i;
            }
        }
        if !(best > floor) {
            return Err(Error::SingularSystem { index: k, pivot: best });
        }
        if p != k {
            perm.swap(p, k);
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = t;
            }
        }
        let piv = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / piv;
            lu[(i, k)] = f;
            if f != 0.0 {
                for j in k + 1..n {
                    lu[(i, j)] -= f * lu[(k, j)];
                }
            }
        }
    }
    Ok(LuFactorization { lu, perm })
}

impl LuFactorization {
    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "rhs length mismatch");
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.lu[(i, k)] * x[k];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.lu[(i, k)] * x[k];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }
}

/// Solves `A x = b` by row-pivoted LU.
pub fn solve_dense(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!("rhs has {} entries, matrix has {} rows", b.len(), a.rows())));
    }
    Ok(factor_lu(a)?.solve(b))
}
