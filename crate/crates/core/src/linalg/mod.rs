//! Dense linear algebra: Cholesky and LU factorizations, a Jacobi-based
//! symmetric generalized eigensolver, one-sided Jacobi singular values, and
//! Gram-orthonormal kernel extraction.

mod eigen;
mod factor;
mod matrix;

pub use eigen::{
    gram_orthonormal_kernel, kernel_dim, normalize_signs, rank, singular_values, split_at_kernel_dim,
    svd_right, sym_eig, sym_generalized_eig, GeneralizedSpectrum, EIG_SYMMETRY_TOL, JACOBI_OFF_TOL, KERNEL_REL_TOL,
};
pub use factor::{
    factor_lu, factor_spd, solve_dense, LuFactorization, SpdFactorization, PIVOT_REL_TOL, SPD_SYMMETRY_TOL,
};
pub use matrix::{add, axpy, dot, gram_norm, norm2, scale, sub, DenseMatrix, MAX_DIM};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn cholesky_identity_and_diagonal() {
        let f = factor_spd(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(f.lower(), &DenseMatrix::identity(3));
        let f = factor_spd(&DenseMatrix::from_diag(&[4.0, 9.0])).unwrap();
        assert_eq!(f.lower(), &DenseMatrix::from_diag(&[2.0, 3.0]));
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let e = factor_spd(&DenseMatrix::from_diag(&[1.0, -1.0])).unwrap_err();
        assert!(matches!(e, Error::NotSpd { index: 1, .. }));
    }

    #[test]
    fn lu_solves() {
        assert_eq!(solve_dense(&DenseMatrix::identity(2), &[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
        let x = solve_dense(&DenseMatrix::from_diag(&[2.0, 4.0]), &[2.0, 8.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0]);
    }

    #[test]
    fn lu_detects_example_singularity() {
        let a = m(&[&[1.0, 0.0, 0.0], &[0.0, -1.0, 1.0], &[0.0, 1.0, -1.0]]);
        for b in [[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]] {
            assert!(matches!(solve_dense(&a, &b), Err(Error::SingularSystem { .. })));
        }
    }

    #[test]
    fn generalized_eig_hand_cases() {
        let s = sym_generalized_eig(&DenseMatrix::from_diag(&[1.0, 4.0]), &DenseMatrix::identity(2)).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 4.0]);
        assert_eq!(s.eigenvectors, DenseMatrix::identity(2));

        let s = sym_generalized_eig(&DenseMatrix::from_diag(&[2.0]), &DenseMatrix::from_diag(&[4.0])).unwrap();
        assert_eq!(s.eigenvalues, vec![0.5]);
        assert_eq!(s.vector(0), vec![0.5]);

        let s = sym_generalized_eig(&DenseMatrix::from_diag(&[0.0, 1.0]), &DenseMatrix::identity(2)).unwrap();
        assert_eq!(s.eigenvalues, vec![0.0, 1.0]);
    }

    #[test]
    fn kernel_hand_cases() {
        let z = gram_orthonormal_kernel(&DenseMatrix::from_diag(&[0.0, 1.0]), &DenseMatrix::identity(2), KERNEL_REL_TOL)
            .unwrap();
        assert_eq!(z.column(0), vec![1.0, 0.0]);
        assert_eq!(z.cols(), 1);

        let z = gram_orthonormal_kernel(&DenseMatrix::identity(2), &DenseMatrix::identity(2), KERNEL_REL_TOL).unwrap();
        assert_eq!(z.cols(), 0);

        let z = gram_orthonormal_kernel(
            &DenseMatrix::from_diag(&[0.0, 1.0]),
            &DenseMatrix::from_diag(&[4.0, 1.0]),
            KERNEL_REL_TOL,
        )
        .unwrap();
        assert_eq!(z.column(0), vec![0.5, 0.0]);
    }

    #[test]
    fn singular_values_of_rectangular() {
        let c = m(&[&[3.0, 0.0, 0.0], &[0.0, 0.0, 2.0]]);
        assert_eq!(singular_values(&c), vec![2.0, 3.0]);
        assert_eq!(rank(&m(&[&[0.0, 0.0]]), 1e-10), 0);
        assert_eq!(rank(&m(&[&[0.0, 1e-9]]), 1e-10), 1);
    }

    #[test]
    fn sign_convention() {
        let mut x = m(&[&[0.1, 0.0], &[-0.9, 0.0], &[0.2, -0.0]]);
        normalize_signs(&mut x);
        assert_eq!(x.column(0), vec![-0.1, 0.9, -0.2]);
    }
}
