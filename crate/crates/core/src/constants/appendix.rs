use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{derived_constants, AsDivGram, AssumptionClass, ConstantsReport, KernelGeometry};
use crate::error::Result;
use crate::linalg::{factor_spd, norm2, DenseMatrix, SpdFactorization};
use crate::problem::{DivGramForm, SplitVariant};

/// Relative slack granted to every inequality.
pub const APPENDIX_SLACK: f64 = 1e-8;
/// Absolute roundoff floor, relative to the magnitude of the compared terms.
const ROUNDOFF: f64 = 1e-13;

/// One inequality that failed beyond slack.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub check: String,
    pub sample: usize,
    pub lhs: f64,
    pub rhs: f64,
}

/// Per-inequality tally.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub evaluated: usize,
    /// Largest `lhs/rhs` seen; at most `1 + slack` when the check holds.
    pub worst_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppendixReport {
    pub class: AssumptionClass,
    pub checks: Vec<CheckSummary>,
    pub violations: Vec<Violation>,
}

impl AppendixReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn record(&mut self, name: &str, sample: usize, lhs: f64, rhs: f64, scale: f64) {
        let idx = match self.checks.iter().position(|c| c.name == name) {
            Some(i) => i,
            None => {
                self.checks.push(CheckSummary { name: name.to_string(), evaluated: 0, worst_ratio: 0.0 });
                self.checks.len() - 1
            }
        };
        let c = &mut self.checks[idx];
        c.evaluated += 1;
        if rhs > 0.0 {
            c.worst_ratio = c.worst_ratio.max(lhs / rhs);
        }
        if !(lhs <= rhs * (1.0 + APPENDIX_SLACK) + ROUNDOFF * scale.abs()) {
            self.violations.push(Violation { check: name.to_string(), sample, lhs, rhs });
        }
    }
}

struct Ctx<'a> {
    form: &'a DivGramForm,
    mv: SpdFactorization,
}

impl Ctx<'_> {
    fn v(&self, x: &[f64]) -> f64 {
        self.form.v_norm(x)
    }

    /// `‖ℓ‖_{V'}` for the functional with coefficient vector `l`.
    fn dual(&self, l: &[f64]) -> f64 {
        norm2(&self.mv.solve_lower(l))
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn random_in(rng: &mut ChaCha8Rng, basis: &DenseMatrix) -> Vec<f64> {
    basis.matvec(&random_vec(rng, basis.cols()))
}

/// Samples the inequalities behind the stable kernel decomposition, the norm
/// equivalences on the complement, the adjoint inf-sup bound, coercivity of
/// the penalized form and the class-(A1) estimates.
pub fn appendix_checks<P: AsDivGram + ?Sized>(p: &P, samples: usize, seed: u64) -> Result<AppendixReport> {
    let form = p.div_gram()?;
    let c = derived_constants(form.as_ref())?;
    run(&form, &c, samples, seed)
}

fn run(form: &DivGramForm, c: &ConstantsReport, samples: usize, seed: u64) -> Result<AppendixReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ctx = Ctx { form, mv: factor_spd(&form.m_v)? };
    let geom = KernelGeometry::new(form)?;
    let n = form.n;
    let mut rep = AppendixReport { class: c.class, checks: Vec::new(), violations: Vec::new() };
    let splits_ok = !c.alpha_ill_posed;
    let ztilde = if splits_ok { Some(geom.complement_basis(SplitVariant::Tilde)?) } else { None };
    let eps = 0.5 * c.eps0.min(1.0);
    let a1 = c.class == AssumptionClass::A1;
    let has_q = form.m != Some(0);

    for s in 0..samples {
        let u = random_vec(&mut rng, n);
        let un = ctx.v(&u);
        if splits_ok {
            for (variant, tag) in [(SplitVariant::Tilde, "tilde"), (SplitVariant::Hat, "hat")] {
                let sp = geom.split(&u, variant)?;
                rep.record(&format!("split {tag}: kernel part"), s, ctx.v(&sp.z), c.phi * un, un);
                rep.record(&format!("split {tag}: complement part"), s, ctx.v(&sp.z_check), c.upsilon * un, un);
                if a1 {
                    let au = form.a.quad(&u).max(0.0);
                    rep.record(&format!("split {tag}: a-seminorm of kernel part"), s, form.a.quad(&sp.z), au, au + un * un * c.m_a);
                    rep.record(&format!("split {tag}: a-seminorm of complement part"), s, form.a.quad(&sp.z_check), au, au + un * un * c.m_a);
                }
            }
        }
        if let (Some(zt), true) = (&ztilde, has_q) {
            if zt.cols() > 0 {
                let w = random_in(&mut rng, zt);
                let (wn, dw) = (ctx.v(&w), form.d_norm(&w));
                rep.record("complement: ‖Dw‖ ≤ M_D‖w‖", s, dw, c.m_d * wn, dw);
                rep.record("complement: ‖w‖ ≤ (Υ/β)‖Dw‖", s, wn, c.upsilon / c.beta * dw, wn);
                let aeps = form.a.quad(&w) + dw * dw / eps;
                let lower = (1.0 / eps - 1.0 / c.eps0) * dw * dw;
                let scale = form.a.quad(&w).abs() + dw * dw / eps;
                rep.record("penalized form coercive on complement", s, lower, aeps, scale);
            }
        }
        if has_q {
            // q = D y for random y; ‖Dᵀq‖_{V'} = ‖K y‖_{V'}.
            let y = random_vec(&mut rng, n);
            let q = form.d_norm(&y);
            let dtq = ctx.dual(&form.k.matvec(&y));
            rep.record("adjoint inf-sup", s, c.beta * q, dtq, dtq);
        }
        if a1 {
            let v = random_vec(&mut rng, n);
            let w = random_vec(&mut rng, n);
            let avw = form.a.bilinear(&w, &v);
            let (avv, aww) = (form.a.quad(&v).max(0.0), form.a.quad(&w).max(0.0));
            rep.record("weak Cauchy-Schwarz", s, avw * avw, avv * aww, c.m_a * c.m_a * ctx.v(&v).powi(2) * ctx.v(&w).powi(2));
            let av = ctx.dual(&form.a.matvec(&v));
            rep.record("‖Av‖² ≤ M_a a(v,v)", s, av * av, c.m_a * avv, c.m_a * c.m_a * ctx.v(&v).powi(2));
        }
    }
    if a1 && !c.kernel_trivial {
        let at = c.alpha_tilde.unwrap_or(f64::INFINITY);
        rep.record("α̃ ≥ α²/M_a", 0, c.alpha * c.alpha / c.m_a - 1e-10, at, 0.0);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::toy_problem;

    #[test]
    fn toy_has_no_violations() {
        let r = appendix_checks(&toy_problem(), 100, 7).unwrap();
        assert!(r.passed(), "{:?}", r.violations);
        assert!(r.checks.iter().all(|c| c.evaluated > 0));
    }

    #[test]
    fn a1_checks_run() {
        let t = toy_problem().with_a(DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap()).unwrap();
        let r = appendix_checks(&t, 50, 1).unwrap();
        assert_eq!(r.class, AssumptionClass::A1);
        assert!(r.checks.iter().any(|c| c.name == "weak Cauchy-Schwarz"));
        assert!(r.checks.iter().any(|c| c.name == "α̃ ≥ α²/M_a"));
        assert!(r.passed(), "{:?}", r.violations);
    }
}
