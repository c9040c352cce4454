//! Continuity, inf-sup and coercivity constants, the assumption class of `a`,
//! the stability constants of the penalty method, and predicted rates.

mod appendix;
mod geometry;
mod spectrum;

pub use appendix::{appendix_checks, AppendixReport, CheckSummary, Violation, APPENDIX_SLACK};
pub use geometry::{
    decompose_kernel, dual_norm_on, g_dual_norm, kernel_basis, load_dual_norms, AsDivGram, KernelGeometry, LoadNorms,
};
pub use spectrum::{dz_spectrum, DzSpectrum};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::f64_or_inf;
use crate::linalg::{
    factor_spd, singular_values, sym_eig, sym_generalized_eig, DenseMatrix, KERNEL_REL_TOL,
};
use crate::problem::DivGramForm;

/// `A` counts as symmetric when `‖A − Aᵀ‖_F ≤ SYMMETRY_TOL·‖A‖_F`.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Coercivity and semidefiniteness thresholds, relative to `M_a`.
pub const COERCIVITY_TOL: f64 = 1e-12;

/// Which structural assumption on `a(·,·)` holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssumptionClass {
    /// Symmetric and coercive on V.
    A3,
    /// Symmetric, positive semidefinite, coercive on the kernel.
    A1,
    /// Coercive on V.
    A2,
    /// Only the kernel inf-sup condition.
    #[serde(rename = "NONE")]
    None,
}

impl std::fmt::Display for AssumptionClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            AssumptionClass::A3 => "A3",
            AssumptionClass::A1 => "A1",
            AssumptionClass::A2 => "A2",
            AssumptionClass::None => "NONE",
        };
        f.write_str(s)
    }
}

/// Kernel inf-sup constant with its degenerate cases flagged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelAlpha {
    /// `+∞` when the kernel is trivial, `0` when the restriction is singular.
    pub value: f64,
    pub trivial_kernel: bool,
    pub ill_posed: bool,
}

/// Result of [`classify_assumption`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub class: AssumptionClass,
    pub alpha_tilde: Option<f64>,
    pub symmetric: bool,
    /// `λ_min(sym(A), M_V)`.
    pub coercivity_v: f64,
    /// `λ_min(sym(A)|_Z, M_V|_Z)`; absent for a trivial kernel.
    pub coercivity_z: Option<f64>,
}

/// `(M_a, M_D)`: continuity constants of `a` and `D`.
pub fn continuity_constants<P: AsDivGram + ?Sized>(p: &P) -> Result<(f64, f64)> {
    let form = p.div_gram()?;
    Ok((m_a_of(&form)?, m_d_of(&form)?))
}

fn m_a_of(form: &DivGramForm) -> Result<f64> {
    let w = factor_spd(&form.m_v)?.whiten(&form.a);
    Ok(singular_values(&w).last().copied().unwrap_or(0.0))
}

fn m_d_of(form: &DivGramForm) -> Result<f64> {
    if form.n == 0 {
        return Ok(0.0);
    }
    Ok(sym_generalized_eig(&form.k, &form.m_v)?.max().max(0.0).sqrt())
}

/// Discrete inf-sup constant of D.
///
/// With a factor `R` of `K` the constant is the smallest relevant singular
/// value of `R L_V⁻ᵀ`, which keeps full accuracy for tiny values; otherwise
/// it is the square root of the smallest nonzero eigenvalue of `(K, M_V)`.
/// Returns `+∞` when Q is trivial.
pub fn inf_sup_beta<P: AsDivGram + ?Sized>(p: &P) -> Result<f64> {
    let form = p.div_gram()?;
    if form.m == Some(0) {
        return Ok(f64::INFINITY);
    }
    let s: Vec<f64> = match &form.k_root {
        Some(r) => {
            let lv = factor_spd(&form.m_v)?;
            let cols: Vec<Vec<f64>> = r.transpose().columns().iter().map(|c| lv.solve_lower(c)).collect();
            singular_values(&DenseMatrix::from_columns(form.n, &cols))
        }
        None => sym_generalized_eig(&form.k, &form.m_v)?.eigenvalues.iter().map(|v| v.max(0.0).sqrt()).collect(),
    };
    let smax = s.last().copied().unwrap_or(0.0);
    let positive: Vec<f64> = match form.m {
        Some(m) if m <= s.len() => s[s.len() - m..].to_vec(),
        _ => s.iter().copied().filter(|&v| v > KERNEL_REL_TOL.sqrt() * smax).collect(),
    };
    Ok(positive.first().copied().unwrap_or(f64::INFINITY))
}

/// Kernel inf-sup constant: smallest singular value of `ZᵀAZ` for an
/// `M_V`-orthonormal kernel basis `Z`.
pub fn kernel_alpha<P: AsDivGram + ?Sized>(p: &P) -> Result<KernelAlpha> {
    let form = p.div_gram()?;
    let z = kernel_basis(&form)?;
    kernel_alpha_with(&form, &z, m_a_of(&form)?)
}

fn kernel_alpha_with(form: &DivGramForm, z: &DenseMatrix, m_a: f64) -> Result<KernelAlpha> {
    if z.cols() == 0 {
        return Ok(KernelAlpha { value: f64::INFINITY, trivial_kernel: true, ill_posed: false });
    }
    let s = singular_values(&form.a.congruence(z));
    let smin = s[0];
    let scale = m_a.max(*s.last().unwrap());
    if !(smin > COERCIVITY_TOL * scale) {
        return Ok(KernelAlpha { value: 0.0, trivial_kernel: false, ill_posed: true });
    }
    Ok(KernelAlpha { value: smin, trivial_kernel: false, ill_posed: false })
}

/// Decides which of the assumptions (A3), (A1), (A2) holds, in that order.
pub fn classify_assumption<P: AsDivGram + ?Sized>(p: &P) -> Result<Classification> {
    let form = p.div_gram()?;
    let z = kernel_basis(&form)?;
    classify_with(&form, &z, m_a_of(&form)?)
}

fn classify_with(form: &DivGramForm, z: &DenseMatrix, m_a: f64) -> Result<Classification> {
    let symmetric = form.a.asymmetry() <= SYMMETRY_TOL;
    let sym = form.a.sym_part();
    let coercivity_v = sym_generalized_eig(&sym, &form.m_v)?.min();
    let coercivity_z = if z.cols() == 0 { None } else { Some(sym_eig(&sym.congruence(z)).0[0]) };
    let tol = COERCIVITY_TOL * m_a;
    let coercive = coercivity_v > tol;
    let psd = coercivity_v >= -tol;
    let z_coercive = coercivity_z.is_none_or(|c| c > tol);
    let (class, alpha_tilde) = if symmetric && coercive {
        (AssumptionClass::A3, Some(coercivity_v))
    } else if symmetric && psd && z_coercive {
        (AssumptionClass::A1, Some(coercivity_z.unwrap_or(f64::INFINITY)))
    } else if coercive {
        (AssumptionClass::A2, Some(coercivity_v))
    } else {
        (AssumptionClass::None, None)
    };
    Ok(Classification { class, alpha_tilde, symmetric, coercivity_v, coercivity_z })
}

/// All constants of the stability and convergence theory for one problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    #[serde(rename = "M_a")]
    pub m_a: f64,
    #[serde(rename = "M_D")]
    pub m_d: f64,
    #[serde(rename = "alpha_X", with = "f64_or_inf")]
    pub alpha: f64,
    #[serde(rename = "alpha_tilde_X")]
    pub alpha_tilde: Option<f64>,
    #[serde(rename = "beta_X", with = "f64_or_inf")]
    pub beta: f64,
    pub class: AssumptionClass,
    #[serde(rename = "Phi_X", with = "f64_or_inf")]
    pub phi: f64,
    #[serde(rename = "Upsilon_X", with = "f64_or_inf")]
    pub upsilon: f64,
    #[serde(with = "f64_or_inf")]
    pub eps0: f64,
    #[serde(with = "f64_or_inf")]
    pub rho0: f64,
    pub kernel_dim: usize,
    pub kernel_trivial: bool,
    pub alpha_ill_posed: bool,
    pub symmetric: bool,
    pub coercivity_v: f64,
    pub coercivity_z: Option<f64>,
}

/// Computes the full constants report.
pub fn derived_constants<P: AsDivGram + ?Sized>(p: &P) -> Result<ConstantsReport> {
    let form = p.div_gram()?;
    let z = kernel_basis(&form)?;
    let m_a = m_a_of(&form)?;
    let m_d = m_d_of(&form)?;
    let beta = inf_sup_beta(form.as_ref())?;
    let alpha = kernel_alpha_with(&form, &z, m_a)?;
    let cls = classify_with(&form, &z, m_a)?;
    let mut r = ConstantsReport {
        m_a,
        m_d,
        alpha: alpha.value,
        alpha_tilde: None,
        beta,
        class: cls.class,
        phi: 0.0,
        upsilon: 0.0,
        eps0: 0.0,
        rho0: 0.0,
        kernel_dim: z.cols(),
        kernel_trivial: alpha.trivial_kernel,
        alpha_ill_posed: alpha.ill_posed,
        symmetric: cls.symmetric,
        coercivity_v: cls.coercivity_v,
        coercivity_z: cls.coercivity_z,
    };
    r.apply_class(cls.class);
    Ok(r)
}

impl ConstantsReport {
    /// Recomputes the class-dependent constants as if `class` held.
    ///
    /// Forcing a weaker class than the detected one is always legitimate; the
    /// constants then become the (larger) bounds of that column.
    pub fn with_class(&self, class: AssumptionClass) -> ConstantsReport {
        let mut r = self.clone();
        r.apply_class(class);
        r
    }

    fn apply_class(&mut self, class: AssumptionClass) {
        self.class = class;
        let m = self.m_a;
        self.alpha_tilde = match class {
            AssumptionClass::A3 | AssumptionClass::A2 => Some(self.coercivity_v),
            AssumptionClass::A1 => Some(self.coercivity_z.unwrap_or(f64::INFINITY)),
            AssumptionClass::None => None,
        };
        self.phi = match class {
            AssumptionClass::A3 | AssumptionClass::A1 => (m / self.alpha_tilde.unwrap()).sqrt(),
            AssumptionClass::A2 => m / self.alpha_tilde.unwrap(),
            AssumptionClass::None => m / self.alpha,
        };
        self.upsilon = match class {
            AssumptionClass::A3 | AssumptionClass::A2 => self.phi,
            AssumptionClass::A1 | AssumptionClass::None => 1.0 + self.phi,
        };
        self.eps0 = match class {
            AssumptionClass::None => (self.beta / self.upsilon).powi(2) / m,
            _ => f64::INFINITY,
        };
        // Written in terms of M_a/α so that a trivial kernel (α = ∞) is handled.
        let r = m / self.alpha;
        self.rho0 = (1.0 + r) * (2.0 + r) * m / (self.beta * self.beta);
    }

    fn at(&self) -> f64 {
        self.alpha_tilde.unwrap_or(f64::NAN)
    }

    /// `ε₀/(ε₀ − ε)`, the blow-up factor of the general column (`+∞` past `ε₀`).
    fn none_factor(&self, eps: f64) -> f64 {
        if eps >= self.eps0 {
            f64::INFINITY
        } else {
            self.eps0 / (self.eps0 - eps)
        }
    }

    pub fn c1(&self) -> f64 {
        match self.class {
            AssumptionClass::None => 1.0 / self.alpha,
            _ => 1.0 / self.at(),
        }
    }

    pub fn c2(&self, eps: f64) -> f64 {
        let (u, b) = (self.upsilon, self.beta);
        match self.class {
            AssumptionClass::None => u * u / (b * b) * self.none_factor(eps),
            AssumptionClass::A1 => u * u / (b * b),
            AssumptionClass::A2 => u.powi(3) / (eps * self.at() * u * u + b * b),
            AssumptionClass::A3 => u * u / (eps * self.m_a + b * b),
        }
    }

    pub fn c3(&self, eps: f64) -> f64 {
        let (u, b) = (self.upsilon, self.beta);
        match self.class {
            AssumptionClass::None => u / b * self.none_factor(eps),
            AssumptionClass::A1 => u / b,
            AssumptionClass::A2 | AssumptionClass::A3 => {
                let at = self.at();
                u * self.m_d / ((eps * at * u * u + b * b) * (eps * at + self.m_d * self.m_d)).sqrt()
            }
        }
    }

    pub fn c4(&self, eps: f64) -> f64 {
        let (u, b, m) = (self.upsilon, self.beta, self.m_a);
        match self.class {
            AssumptionClass::None => m * u / (b * b) * self.none_factor(eps),
            AssumptionClass::A1 | AssumptionClass::A3 => m / (eps * m + b * b),
            AssumptionClass::A2 => m * u / (eps * m * u + b * b),
        }
    }

    /// `min{M_D·C², C³}`.
    pub fn c23(&self, eps: f64) -> f64 {
        (self.m_d * self.c2(eps)).min(self.c3(eps))
    }

    /// Geometric rate of the one-parameter iteration (`λ = ρ`).
    pub fn predicted_rate(&self, rho: f64) -> Result<f64> {
        let (m, b) = (self.m_a, self.beta);
        match self.class {
            AssumptionClass::None => {
                if rho > self.rho0 {
                    let a = self.alpha;
                    Ok(m * a * (a + m) / (rho * a * a * b * b - m * (a + m) * (a + m)))
                } else {
                    Err(Error::RateUndefined { rho, rho0: self.rho0 })
                }
            }
            AssumptionClass::A1 | AssumptionClass::A3 => Ok(m / (m + rho * b * b)),
            AssumptionClass::A2 => Ok(m * self.upsilon / (m * self.upsilon + rho * b * b)),
        }
    }

    /// `|1 − ρ/λ|`.
    pub fn eta(&self, lambda: f64, rho: f64) -> f64 {
        (1.0 - rho / lambda).abs()
    }

    pub fn tau(&self, lambda: f64, rho: f64) -> f64 {
        let e = 1.0 / lambda;
        rho * self.m_a / (lambda * lambda) * self.c2(e).min(self.c3(e) / self.beta) + self.eta(lambda, rho)
    }

    pub fn xi(&self, lambda: f64, rho: f64) -> f64 {
        let e = 1.0 / lambda;
        rho / (lambda * lambda) * (self.m_a / self.beta * self.c23(e)).min(self.c4(e)) + self.eta(lambda, rho)
    }

    /// Rate guaranteed for the two-parameter iteration, when the theory gives one
    /// (`η < 1` and `min(τ, ξ) < 1`).
    pub fn two_param_rate(&self, lambda: f64, rho: f64) -> Option<f64> {
        let r = self.tau(lambda, rho).min(self.xi(lambda, rho));
        (self.eta(lambda, rho) < 1.0 && r < 1.0).then_some(r)
    }
}
