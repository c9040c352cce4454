use std::borrow::Cow;

use crate::error::{Error, Result};
use crate::linalg::{
    self, factor_lu, gram_orthonormal_kernel, split_at_kernel_dim, sym_generalized_eig, DenseMatrix, LuFactorization,
    KERNEL_REL_TOL,
};
use crate::problem::{to_div_gram, DivGramForm, KernelSplit, SaddleProblem, SplitVariant};

/// Anything that can be viewed as a pressure-basis-free form.
pub trait AsDivGram {
    fn div_gram(&self) -> Result<Cow<'_, DivGramForm>>;
}

impl AsDivGram for DivGramForm {
    fn div_gram(&self) -> Result<Cow<'_, DivGramForm>> {
        Ok(Cow::Borrowed(self))
    }
}

impl AsDivGram for SaddleProblem {
    fn div_gram(&self) -> Result<Cow<'_, DivGramForm>> {
        Ok(Cow::Owned(to_div_gram(self)?))
    }
}

/// `M_V`-orthonormal basis of `Z = ker D`.
///
/// When `dim Q` is known the kernel dimension is `n − m` exactly; otherwise
/// eigenvalues of `(K, M_V)` below `1e-10·λ_max` count as zero.
pub fn kernel_basis(form: &DivGramForm) -> Result<DenseMatrix> {
    match form.m {
        Some(m) => Ok(split_at_kernel_dim(&form.k, &form.m_v, form.n.saturating_sub(m))?.0),
        None => gram_orthonormal_kernel(&form.k, &form.m_v, KERNEL_REL_TOL),
    }
}

/// Kernel basis together with factored kernel restrictions of `A` and `Aᵀ`.
#[derive(Debug, Clone)]
pub struct KernelGeometry {
    pub z: DenseMatrix,
    a: DenseMatrix,
    m_v: DenseMatrix,
    tilde: Option<LuFactorization>,
    hat: Option<LuFactorization>,
}

impl KernelGeometry {
    pub fn new(form: &DivGramForm) -> Result<Self> {
        let z = kernel_basis(form)?;
        let (tilde, hat) = if z.cols() == 0 {
            (None, None)
        } else {
            let r = form.a.congruence(&z);
            (factor_lu(&r).ok(), factor_lu(&r.transpose()).ok())
        };
        Ok(KernelGeometry { z, a: form.a.clone(), m_v: form.m_v.clone(), tilde, hat })
    }

    pub fn kernel_dim(&self) -> usize {
        self.z.cols()
    }

    /// `u = z + ž`; the tilde variant makes `a(ž, w) = 0` for all `w ∈ Z`,
    /// the hat variant makes `a(w, ž) = 0`.
    pub fn split(&self, u: &[f64], variant: SplitVariant) -> Result<KernelSplit> {
        if self.kernel_dim() == 0 {
            return Ok(KernelSplit { z: vec![0.0; u.len()], z_check: u.to_vec(), variant });
        }
        let (lu, rhs) = match variant {
            SplitVariant::Tilde => (&self.tilde, self.z.tr_matvec(&self.a.matvec(u))),
            SplitVariant::Hat => (&self.hat, self.z.tr_matvec(&self.a.tr_matvec(u))),
        };
        let lu = lu.as_ref().ok_or(Error::IllPosedKernel)?;
        let z = self.z.matvec(&lu.solve(&rhs));
        let z_check = linalg::sub(u, &z);
        Ok(KernelSplit { z, z_check, variant })
    }

    /// `M_V`-orthonormal basis of `Z̃` or `Ẑ`.
    pub fn complement_basis(&self, variant: SplitVariant) -> Result<DenseMatrix> {
        let n = self.a.rows();
        let k = self.kernel_dim();
        let c = match variant {
            SplitVariant::Tilde => self.a.transpose().matmul(&self.z),
            SplitVariant::Hat => self.a.matmul(&self.z),
        };
        Ok(split_at_kernel_dim(&c.matmul(&c.transpose()), &self.m_v, n - k)?.0)
    }
}

/// Splits `u` against the kernel of D.
pub fn decompose_kernel<P: AsDivGram + ?Sized>(p: &P, u: &[f64], variant: SplitVariant) -> Result<KernelSplit> {
    let form = p.div_gram()?;
    KernelGeometry::new(&form)?.split(u, variant)
}

/// Dual norms of the loads that enter the stability bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadNorms {
    /// `‖F‖_{V'}`.
    pub f_v: f64,
    /// `‖F‖_{Z'}`.
    pub f_z: f64,
    /// `‖F‖_{Ẑ'}`.
    pub f_zhat: f64,
    /// `‖G‖_{Q'}`.
    pub g_q: f64,
}

/// Dual norm of `f` over the span of `M_V`-orthonormal columns.
pub fn dual_norm_on(basis: &DenseMatrix, f: &[f64]) -> f64 {
    linalg::norm2(&basis.tr_matvec(f))
}

/// `‖G‖_{Q'}` from the form: through the Riesz preimage when known,
/// otherwise from the range spectrum of `(K, M_V)`.
pub fn g_dual_norm(form: &DivGramForm) -> Result<f64> {
    if form.g_is_zero() {
        return Ok(0.0);
    }
    if let Some(y) = &form.g_preimage {
        return Ok(form.d_norm(y));
    }
    let spec = sym_generalized_eig(&form.k, &form.m_v)?;
    let kdim = match form.m {
        Some(m) => form.n - m,
        None => gram_orthonormal_kernel(&form.k, &form.m_v, KERNEL_REL_TOL)?.cols(),
    };
    let mut s = 0.0;
    for j in kdim..spec.len() {
        let c = linalg::dot(&form.gd, &spec.vector(j));
        s += c * c / spec.eigenvalues[j];
    }
    Ok(s.sqrt())
}

/// Computes every load dual norm used by the stability bounds.
pub fn load_dual_norms(form: &DivGramForm, geom: &KernelGeometry) -> Result<LoadNorms> {
    let whole = split_at_kernel_dim(&DenseMatrix::zeros(form.n, form.n), &form.m_v, form.n)?.0;
    Ok(LoadNorms {
        f_v: dual_norm_on(&whole, &form.f),
        f_z: dual_norm_on(&geom.z, &form.f),
        f_zhat: dual_norm_on(&geom.complement_basis(SplitVariant::Hat)?, &form.f),
        g_q: g_dual_norm(form)?,
    })
}
