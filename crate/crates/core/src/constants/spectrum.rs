use super::{classify_assumption, AssumptionClass, AsDivGram};
use crate::error::{Error, Result};
use crate::linalg::{dot, factor_spd, svd_right, sym_eig, DenseMatrix, KERNEL_REL_TOL};
use crate::problem::DivGramForm;

/// Modes of `(Dz̃, Dw)_Q = σ² a(z̃, w)` on the a-orthogonal complement of `Z`.
#[derive(Debug, Clone)]
pub struct DzSpectrum {
    /// Ascending, strictly positive.
    pub sigmas: Vec<f64>,
    /// a-orthonormal columns matching `sigmas`.
    pub ztilde: DenseMatrix,
    /// a-orthonormal basis of `Z`.
    pub kernel: DenseMatrix,
}

impl DzSpectrum {
    /// `dim Z`.
    pub fn n0(&self) -> usize {
        self.kernel.cols()
    }

    /// `β_{X,a} = σ₁`.
    pub fn beta_a(&self) -> f64 {
        self.sigmas.first().copied().unwrap_or(f64::INFINITY)
    }

    /// `M_{D,a} = σ_max`.
    pub fn m_d_a(&self) -> f64 {
        self.sigmas.last().copied().unwrap_or(0.0)
    }

    /// `c_j = F(z̃_j) − σ_j⁻¹G(ψ_j)`, where `G(ψ_j) = σ_j⁻¹ gD·z̃_j`.
    pub fn mode_coefficients(&self, f: &[f64], gd: &[f64]) -> Vec<f64> {
        (0..self.sigmas.len())
            .map(|j| {
                let z = self.ztilde.column(j);
                let s = self.sigmas[j];
                dot(f, &z) - dot(gd, &z) / (s * s)
            })
            .collect()
    }

    /// Exact solution `u_X` and a V-preimage `y_p` of the exact pressure
    /// (`p_X = D y_p`), both expanded in the modes.
    pub fn expansion(&self, f: &[f64], gd: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.ztilde.rows();
        let mut u = vec![0.0; n];
        for i in 0..self.n0() {
            let z = self.kernel.column(i);
            crate::linalg::axpy(dot(f, &z), &z, &mut u);
        }
        let c = self.mode_coefficients(f, gd);
        let mut y = vec![0.0; n];
        for j in 0..self.sigmas.len() {
            let z = self.ztilde.column(j);
            let s2 = self.sigmas[j] * self.sigmas[j];
            crate::linalg::axpy(dot(gd, &z) / s2, &z, &mut u);
            crate::linalg::axpy(c[j] / s2, &z, &mut y);
        }
        (u, y)
    }
}

/// Spectral decomposition of D against `a`; only for class (A3).
///
/// The modes come from a one-sided Jacobi SVD of `R L_A⁻ᵀ`, where `RᵀR = K`
/// and `L_A L_Aᵀ = A`, so tiny `σ` keep their relative accuracy.
pub fn dz_spectrum<P: AsDivGram + ?Sized>(p: &P) -> Result<DzSpectrum> {
    let form = p.div_gram()?;
    let class = classify_assumption(form.as_ref())?.class;
    if class != AssumptionClass::A3 {
        return Err(Error::NotApplicable(format!("the modal decomposition needs class A3, found {class}")));
    }
    spectrum_against(&form, &form.a.sym_part())
}

pub(crate) fn spectrum_against(form: &DivGramForm, a: &DenseMatrix) -> Result<DzSpectrum> {
    let n = form.n;
    let la = factor_spd(a)?;
    let root = match &form.k_root {
        Some(r) => r.clone(),
        None => {
            let (mu, v) = sym_eig(&form.k);
            let rows: Vec<Vec<f64>> =
                (0..n).map(|i| v.column(i).iter().map(|x| x * mu[i].max(0.0).sqrt()).collect()).collect();
            DenseMatrix::from_rows(&rows)?
        }
    };
    // C = R L_A⁻ᵀ, built row by row as (L_A⁻¹ rᵢ)ᵀ.
    let c_rows: Vec<Vec<f64>> = (0..root.rows()).map(|i| la.solve_lower(root.row(i))).collect();
    let c = if c_rows.is_empty() { DenseMatrix::zeros(0, n) } else { DenseMatrix::from_rows(&c_rows)? };
    let (s, v) = svd_right(&c);
    let smax = s.last().copied().unwrap_or(0.0);
    let kdim = match form.m {
        Some(m) => n.saturating_sub(m),
        None => s.iter().filter(|&&x| x <= KERNEL_REL_TOL.sqrt() * smax).count(),
    };
    let z = la.back_transform(&v);
    let kernel = z.select_columns(&(0..kdim).collect::<Vec<_>>());
    let ztilde = z.select_columns(&(kdim..n).collect::<Vec<_>>());
    Ok(DzSpectrum { sigmas: s[kdim..].to_vec(), ztilde, kernel })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::inf_sup_beta;
    use crate::problem::{to_div_gram, toy_problem, SaddleProblem};

    #[test]
    fn toy_spectrum() {
        let s = dz_spectrum(&toy_problem()).unwrap();
        assert_eq!(s.sigmas, vec![1.0]);
        assert_eq!(s.ztilde.column(0), vec![0.0, 1.0]);
        assert_eq!(s.n0(), 1);
        assert_eq!(s.mode_coefficients(&[1.0, 2.0], &[0.0, 3.0]), vec![-1.0]);
        let (u, y) = s.expansion(&[1.0, 2.0], &[0.0, 3.0]);
        assert_eq!(u, vec![1.0, 3.0]);
        assert_eq!(y, vec![0.0, -1.0]);
    }

    #[test]
    fn tiny_sigma_survives() {
        let t = toy_problem();
        for d in [1e-3, 1e-6, 1e-10] {
            let p = SaddleProblem::new(
                t.a.clone(),
                DenseMatrix::from_rows(&[vec![0.0, d]]).unwrap(),
                t.m_v.clone(),
                t.m_q.clone(),
                t.f.clone(),
                t.gq.clone(),
            )
            .unwrap();
            let s = dz_spectrum(&p).unwrap();
            assert_eq!(s.sigmas, vec![d]);
            assert_eq!(inf_sup_beta(&p).unwrap(), d);
        }
    }

    #[test]
    fn nonsymmetric_is_rejected() {
        let t = toy_problem().with_a(DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![-1.0, 1.0]]).unwrap()).unwrap();
        assert!(matches!(dz_spectrum(&t), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn form_without_root() {
        let mut form = to_div_gram(&toy_problem()).unwrap();
        form.k_root = None;
        form.m = None;
        let s = dz_spectrum(&form).unwrap();
        assert!((s.sigmas[0] - 1.0).abs() < 1e-15);
    }
}
