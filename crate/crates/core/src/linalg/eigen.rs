use super::factor::factor_spd;
use super::matrix::{dot, DenseMatrix};
use crate::error::{Error, Result};

/// Jacobi sweeps stop once the off-diagonal mass falls below this fraction of `‖S‖_F`.
pub const JACOBI_OFF_TOL: f64 = 1e-13;
/// Symmetry tolerance for the left operand of a generalized problem.
pub const EIG_SYMMETRY_TOL: f64 = 1e-10;
/// Default relative zero threshold for kernel extraction.
pub const KERNEL_REL_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 100;

/// Solution of `A x = λ B x`: ascending eigenvalues and `B`-orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct GeneralizedSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix,
}

impl GeneralizedSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vector(&self, j: usize) -> Vec<f64> {
        self.eigenvectors.column(j)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::NAN)
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns ascending eigenvalues and orthonormal eigenvector columns.
pub fn sym_eig(s: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    assert!(s.is_square());
    let n = s.rows();
    let mut a = s.sym_part();
    let mut v = DenseMatrix::identity(n);
    let target = JACOBI_OFF_TOL * a.frobenius_norm();
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += 2.0 * a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= target {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    (values, v.select_columns(&order))
}

/// Flips each column so that its first entry of largest magnitude is positive.
pub fn normalize_signs(x: &mut DenseMatrix) {
    for j in 0..x.cols() {
        let mut best = 0.0;
        let mut sign = 1.0;
        for i in 0..x.rows() {
            let v = x[(i, j)];
            if v.abs() > best {
                best = v.abs();
                sign = v.signum();
            }
        }
        if sign < 0.0 {
            for i in 0..x.rows() {
                x[(i, j)] = -x[(i, j)];
            }
        }
    }
}

/// Full spectrum of the symmetric-definite pencil `(A, B)`.
pub fn sym_generalized_eig(a: &DenseMatrix, b: &DenseMatrix) -> Result<GeneralizedSpectrum> {
    if !a.is_square() || !b.is_square() || a.rows() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "pencil shapes {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let asym = a.asymmetry();
    if asym > EIG_SYMMETRY_TOL {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let chol = factor_spd(b)?;
    let c = chol.whiten(a);
    let (values, y) = sym_eig(&c);
    let mut x = chol.back_transform(&y);
    normalize_signs(&mut x);
    Ok(GeneralizedSpectrum { eigenvalues: values, eigenvectors: x })
}

/// Number of eigenvalues of `(K, M)` counted as zero under the relative rule.
fn kernel_count(values: &[f64], rel_tol: f64) -> usize {
    let lmax = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    values.iter().filter(|&&v| v <= rel_tol * lmax).count()
}

/// `M`-orthonormal basis of the numerical kernel of the PSD matrix `K`.
///
/// An eigenvalue of `(K, M)` is zero iff it is at most `rel_tol·λ_max`.
pub fn gram_orthonormal_kernel(k: &DenseMatrix, m: &DenseMatrix, rel_tol: f64) -> Result<DenseMatrix> {
    let spec = sym_generalized_eig(k, m)?;
    let count = kernel_count(&spec.eigenvalues, rel_tol);
    Ok(spec.eigenvectors.select_columns(&(0..count).collect::<Vec<_>>()))
}

/// Splits the spectrum of `(K, M)` at a known kernel dimension.
///
/// Returns `(kernel basis, range basis, range eigenvalues)`, all `M`-orthonormal.
pub fn split_at_kernel_dim(
    k: &DenseMatrix,
    m: &DenseMatrix,
    kernel_dim: usize,
) -> Result<(DenseMatrix, DenseMatrix, Vec<f64>)> {
    let spec = sym_generalized_eig(k, m)?;
    let n = spec.len();
    let kdim = kernel_dim.min(n);
    let kern = spec.eigenvectors.select_columns(&(0..kdim).collect::<Vec<_>>());
    let range = spec.eigenvectors.select_columns(&(kdim..n).collect::<Vec<_>>());
    Ok((kern, range, spec.eigenvalues[kdim..].to_vec()))
}

/// Kernel dimension of `(K, M)` under the relative rule.
pub fn kernel_dim(k: &DenseMatrix, m: &DenseMatrix, rel_tol: f64) -> Result<usize> {
    let spec = sym_generalized_eig(k, m)?;
    Ok(kernel_count(&spec.eigenvalues, rel_tol))
}

/// Singular values of `c`, ascending, by one-sided Jacobi.
///
/// Small singular values come out with absolute accuracy near `ε_mach·‖c‖`,
/// without the squaring a Gram-matrix route would incur.
pub fn singular_values(c: &DenseMatrix) -> Vec<f64> {
    let g = if c.rows() >= c.cols() { c.clone() } else { c.transpose() };
    let (rows, cols) = (g.rows(), g.cols());
    let mut w: Vec<Vec<f64>> = g.columns();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for i in 0..rows {
                    let a = w[p][i];
                    let b = w[q][i];
                    w[p][i] = cs * a - sn * b;
                    w[q][i] = sn * a + cs * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = w.iter().map(|col| dot(col, col).sqrt()).collect();
    s.sort_by(f64::total_cmp);
    s
}

/// Singular values and right singular vectors of `c` (`m×n`), by one-sided
/// Jacobi on the columns.
///
/// Returns `n` values in ascending order (with `n − m` zeros when `m < n`)
/// and the orthogonal `n×n` matrix whose columns are the matching vectors.
pub fn svd_right(c: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let (rows, cols) = (c.rows(), c.cols());
    let mut w: Vec<Vec<f64>> = c.columns();
    let mut v: Vec<Vec<f64>> = DenseMatrix::identity(cols).columns();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for i in 0..rows {
                    let a = w[p][i];
                    let b = w[q][i];
                    w[p][i] = cs * a - sn * b;
                    w[q][i] = sn * a + cs * b;
                }
                for i in 0..cols {
                    let a = v[p][i];
                    let b = v[q][i];
                    v[p][i] = cs * a - sn * b;
                    v[q][i] = sn * a + cs * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let s: Vec<f64> = w.iter().map(|col| dot(col, col).sqrt()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| s[i].total_cmp(&s[j]));
    let values = order.iter().map(|&i| s[i]).collect();
    let mut vecs = DenseMatrix::from_columns(cols, &order.iter().map(|&i| v[i].clone()).collect::<Vec<_>>());
    normalize_signs(&mut vecs);
    (values, vecs)
}

/// Numerical rank: singular values above `rel_tol·σ_max`.
pub fn rank(c: &DenseMatrix, rel_tol: f64) -> usize {
    let s = singular_values(c);
    let smax = s.last().copied().unwrap_or(0.0);
    s.iter().filter(|&&v| v > rel_tol * smax).count()
}
