//! The iterated penalty method: the reference two-parameter iteration, the
//! basis-free partial iteration and Algorithm-style driver, error propagation
//! checks, and the closed-form error oracle for symmetric coercive `a`.

mod oracle;
mod trace;

pub(crate) use oracle::predict as oracle_predict;
pub use oracle::{spd_error_oracle, ModeSplit, SpdErrorPrediction};
pub use trace::{write_trace_csv, IpmTrace, IterRecord, QGeometry, ReferenceSolution, Termination};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, factor_lu, factor_spd, DenseMatrix};
use crate::problem::{to_div_gram, DivGramForm, Pressure, PressureRep, SaddleProblem};

pub const DEFAULT_TOL1: f64 = 2e-12;
pub const DEFAULT_TOL2: f64 = 1e-11;
pub const DEFAULT_MAX_ITERS: usize = 1000;

/// Parameters of the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IpmConfig {
    pub lambda: f64,
    pub rho: f64,
    /// Tolerance of the Riesz subsolve.
    pub tol1: f64,
    /// Tolerance of the main solve.
    pub tol2: f64,
    pub max_iters: usize,
}

impl IpmConfig {
    /// `λ = ρ` with default tolerances and cap.
    pub fn new(rho: f64) -> Self {
        IpmConfig { lambda: rho, rho, tol1: DEFAULT_TOL1, tol2: DEFAULT_TOL2, max_iters: DEFAULT_MAX_ITERS }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_tols(mut self, tol1: f64, tol2: f64) -> Self {
        self.tol1 = tol1;
        self.tol2 = tol2;
        self
    }

    pub fn with_max_iters(mut self, n: usize) -> Self {
        self.max_iters = n;
        self
    }

    /// Checks positivity and finiteness; `tol2 > tol1` only when a subsolve is needed.
    pub fn validate(&self, needs_subsolve: bool) -> Result<()> {
        let mut bad = Vec::new();
        for (name, v) in [("lambda", self.lambda), ("rho", self.rho), ("tol1", self.tol1), ("tol2", self.tol2)] {
            if !(v > 0.0 && v.is_finite()) {
                bad.push(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if self.max_iters == 0 {
            bad.push("max_iters must be at least 1".into());
        }
        if !bad.is_empty() {
            return Err(Error::InvalidConfig(bad.join("; ")));
        }
        if needs_subsolve && self.tol2 <= self.tol1 {
            return Err(Error::TolOrder { tol1: self.tol1, tol2: self.tol2 });
        }
        Ok(())
    }
}

/// The two-parameter iteration with an explicit pressure, starting from `p⁰ = 0`.
///
/// Stops once `‖Duⁿ − R_Q⁻¹G‖_Q < tol2` or after `max_iters` steps; the
/// trace records which.
pub fn ipm_reference(p: &SaddleProblem, cfg: &IpmConfig) -> Result<IpmTrace> {
    cfg.validate(false)?;
    let form = to_div_gram(p)?;
    let a_lam = form.a.lin_comb(1.0, &form.k, cfg.lambda);
    let lu = factor_lu(&a_lam)?;
    let g = if p.m == 0 { Vec::new() } else { factor_spd(&p.m_q)?.solve(&p.gq) };
    let base: Vec<f64> = form.f.iter().zip(&form.gd).map(|(f, gd)| f + cfg.lambda * gd).collect();
    let bt = p.m_q.matmul(&p.dc).transpose();
    let mut pr = vec![0.0; p.m];
    let mut records = Vec::new();
    let mut termination = Termination::MaxIters;
    for n in 1..=cfg.max_iters {
        let rhs = linalg::sub(&base, &bt.matvec(&pr));
        let u = lu.solve(&rhs);
        let r = linalg::sub(&p.dc.matvec(&u), &g);
        linalg::axpy(cfg.rho, &r, &mut pr);
        let residual = p.q_norm(&r);
        records.push(IterRecord::new(n, u, Pressure::Coefficients(pr.clone()), residual));
        if residual < cfg.tol2 {
            termination = Termination::Converged;
            break;
        }
    }
    Ok(IpmTrace { records, termination, tol: cfg.tol2 })
}

/// Result of one [`partial_ipm`] call.
#[derive(Debug, Clone)]
pub struct PartialOutcome {
    /// Last iterate `μⁿ`.
    pub u: Vec<f64>,
    /// Accumulated `ωⁿ = ρ Σ μᵏ`.
    pub w: Vec<f64>,
    pub n_it: usize,
    pub trace: IpmTrace,
}

/// The basis-free inner iteration.
///
/// `ω⁰ = 0`; step `n` solves `(Â + ρK)μⁿ = F̂ − Kωⁿ⁻¹ + nρĝ` and sets
/// `ωⁿ = ωⁿ⁻¹ + ρμⁿ`; it stops once `‖D(μⁿ − y)‖_Q < tol`. The target of the
/// constraint is carried as a V-vector `y`.
#[allow(clippy::too_many_arguments)]
pub fn partial_ipm(
    form: &DivGramForm,
    a: &DenseMatrix,
    f: &[f64],
    gd: &[f64],
    rho: f64,
    y: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<PartialOutcome> {
    let n = form.n;
    if (a.rows(), a.cols()) != (n, n) || f.len() != n || gd.len() != n || y.len() != n {
        return Err(Error::DimensionMismatch("partial iteration data do not match the form".into()));
    }
    if !(rho > 0.0 && rho.is_finite() && tol > 0.0) || max_iters == 0 {
        return Err(Error::InvalidConfig(format!("invalid partial iteration parameters rho={rho} tol={tol}")));
    }
    let lu = factor_lu(&a.lin_comb(1.0, &form.k, rho))?;
    let mut w = vec![0.0; n];
    let mut mu = vec![0.0; n];
    let mut records = Vec::new();
    let mut termination = Termination::MaxIters;
    for it in 1..=max_iters {
        let kw = form.k.matvec(&w);
        let s = it as f64 * rho;
        let rhs: Vec<f64> = (0..n).map(|i| f[i] - kw[i] + s * gd[i]).collect();
        mu = lu.solve(&rhs);
        linalg::axpy(rho, &mu, &mut w);
        let residual = form.d_norm(&linalg::sub(&mu, y));
        let rep = PressureRep { w: w.clone(), y: y.to_vec(), n_it: it, rho };
        records.push(IterRecord::new(it, mu.clone(), Pressure::Represented(rep), residual));
        if residual < tol {
            termination = Termination::Converged;
            break;
        }
    }
    let n_it = records.len();
    Ok(PartialOutcome { u: mu, w, n_it, trace: IpmTrace { records, termination, tol } })
}

/// Output of [`ipm_solve`].
#[derive(Debug, Clone)]
pub struct IpmSolution {
    pub u: Vec<f64>,
    pub pressure: PressureRep,
    pub main: IpmTrace,
    /// Trace of the Riesz subsolve when it ran.
    pub subsolve: Option<IpmTrace>,
}

impl IpmSolution {
    pub fn termination(&self) -> Termination {
        match &self.subsolve {
            Some(s) if s.termination == Termination::MaxIters => Termination::MaxIters,
            _ => self.main.termination,
        }
    }

    pub fn iterations(&self) -> usize {
        self.main.records.len()
    }

    /// `Err(MaxIters)` unless every stage converged.
    pub fn ensure_converged(&self) -> Result<()> {
        if let Some(s) = &self.subsolve {
            s.ensure_converged()?;
        }
        self.main.ensure_converged()
    }
}

/// Computable iterated penalty method with `λ = ρ`.
///
/// With `G = 0` a single partial iteration runs. Otherwise a first partial
/// iteration on `((·,·)_V, G(D·))` at `tol1` yields `y` with `Dy ≈ R_Q⁻¹G`,
/// and the main iteration targets it at `tol2`; the pressure is
/// `D w − nρ D y`.
pub fn ipm_solve(form: &DivGramForm, cfg: &IpmConfig) -> Result<IpmSolution> {
    let needs_sub = !form.g_is_zero();
    cfg.validate(needs_sub)?;
    check_one_parameter(cfg)?;
    if !needs_sub {
        return ipm_solve_with_riesz(form, cfg, &vec![0.0; form.n]);
    }
    let zeros = vec![0.0; form.n];
    let sub = partial_ipm(form, &form.m_v, &form.gd, &zeros, cfg.rho, &zeros, cfg.tol1, cfg.max_iters)?;
    let mut sol = ipm_solve_with_riesz(form, cfg, &sub.w)?;
    sol.subsolve = Some(sub.trace);
    Ok(sol)
}

/// Main stage only, with a caller-supplied `y` satisfying `Dy = R_Q⁻¹G`.
pub fn ipm_solve_with_riesz(form: &DivGramForm, cfg: &IpmConfig, y: &[f64]) -> Result<IpmSolution> {
    cfg.validate(false)?;
    check_one_parameter(cfg)?;
    let out = partial_ipm(form, &form.a, &form.f, &form.gd, cfg.rho, y, cfg.tol2, cfg.max_iters)?;
    let pressure = PressureRep { w: out.w, y: y.to_vec(), n_it: out.n_it, rho: cfg.rho };
    Ok(IpmSolution { u: out.u, pressure, main: out.trace, subsolve: None })
}

fn check_one_parameter(cfg: &IpmConfig) -> Result<()> {
    if cfg.lambda != cfg.rho {
        return Err(Error::InvalidConfig(format!(
            "the basis-free iteration runs with lambda = rho (got lambda={}, rho={})",
            cfg.lambda, cfg.rho
        )));
    }
    Ok(())
}

/// Deviation between the error propagation formulas and the actual iterates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropagationDeviation {
    /// Largest `‖predicted − actual‖_V` of the velocity error, over `‖u_X − u_{X,1/λ}‖_V`.
    pub u: f64,
    /// Same for the pressure error in `‖·‖_Q`, over `‖p_X‖_Q`.
    pub p: f64,
}

impl PropagationDeviation {
    pub fn max(&self) -> f64 {
        self.u.max(self.p)
    }
}

/// Runs `n` steps of [`ipm_reference`] and compares each error with the
/// powers of the propagation operators applied to the initial errors.
pub fn check_error_propagation(p: &SaddleProblem, cfg: &IpmConfig, n: usize) -> Result<PropagationDeviation> {
    cfg.validate(false)?;
    let form = to_div_gram(p)?;
    let reference = crate::problem::kkt_solve(p, 0.0)?;
    let px = reference.p().unwrap_or(&[]).to_vec();
    let a_lam = form.a.lin_comb(1.0, &form.k, cfg.lambda);
    let lu = factor_lu(&a_lam)?;
    let base: Vec<f64> = form.f.iter().zip(&form.gd).map(|(f, gd)| f + cfg.lambda * gd).collect();
    let u_pen = lu.solve(&base);
    let bt = p.m_q.matmul(&p.dc).transpose();

    let run = ipm_reference(p, &IpmConfig { tol2: f64::MIN_POSITIVE, max_iters: n, ..*cfg })?;
    let e0 = linalg::sub(&reference.u, &u_pen);
    let (e0n, p0n) = (p.v_norm(&e0), p.q_norm(&px));
    let rel = |d: f64, s: f64| if s > 0.0 { d / s } else { d };

    let mut pred_e = e0.clone();
    let mut pred_r = px.clone();
    let mut dev = PropagationDeviation { u: 0.0, p: 0.0 };
    for (k, rec) in run.records.iter().enumerate() {
        if k > 0 {
            let step = lu.solve(&form.k.matvec(&pred_e));
            linalg::axpy(-cfg.rho, &step, &mut pred_e);
        }
        let step = p.dc.matvec(&lu.solve(&bt.matvec(&pred_r)));
        linalg::axpy(-cfg.rho, &step, &mut pred_r);
        let e = linalg::sub(&reference.u, &rec.u);
        let r = linalg::sub(&px, rec.pressure_coefficients().unwrap_or(&[]));
        dev.u = dev.u.max(rel(p.v_norm(&linalg::sub(&pred_e, &e)), e0n));
        dev.p = dev.p.max(rel(p.q_norm(&linalg::sub(&pred_r, &r)), p0n));
    }
    Ok(dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::toy_problem;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn toy_reference_iterates() {
        let t = ipm_reference(&toy_problem(), &IpmConfig::new(9.0)).unwrap();
        let r = &t.records;
        assert!(close(&r[0].u, &[1.0, 2.9], 1e-14));
        assert!(close(r[0].pressure_coefficients().unwrap(), &[-0.9], 1e-14));
        assert!(close(&r[1].u, &[1.0, 2.99], 1e-14));
        assert!(close(r[1].pressure_coefficients().unwrap(), &[-0.99], 1e-14));
        assert_eq!(t.termination, Termination::Converged);
    }

    #[test]
    fn zero_loads_converge_at_once() {
        let p = toy_problem().with_loads(vec![0.0, 0.0], vec![0.0]).unwrap();
        let t = ipm_reference(&p, &IpmConfig::new(9.0)).unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.records[0].u, vec![0.0, 0.0]);
        let form = to_div_gram(&p).unwrap();
        let s = ipm_solve(&form, &IpmConfig::new(9.0)).unwrap();
        assert_eq!(s.iterations(), 1);
        assert!(s.subsolve.is_none());
    }

    #[test]
    fn toy_partial_iterates() {
        let form = to_div_gram(&toy_problem()).unwrap();
        let out = partial_ipm(&form, &form.a, &form.f, &form.gd, 9.0, &[0.0, 3.0], 1e-300, 2).unwrap();
        let r = &out.trace.records;
        assert!(close(&r[0].u, &[1.0, 2.9], 1e-14));
        assert!((r[0].residual - 0.1).abs() < 1e-14);
        assert!(close(&r[1].u, &[1.0, 2.99], 1e-14));
        assert!((r[1].residual - 0.01).abs() < 1e-14);
        assert_eq!(out.trace.termination, Termination::MaxIters);
        assert!(matches!(out.trace.ensure_converged(), Err(Error::MaxIters { iterations: 2, .. })));
    }

    #[test]
    fn toy_solve_with_subsolve() {
        let form = to_div_gram(&toy_problem()).unwrap();
        let cfg = IpmConfig::new(9.0).with_tols(2e-12, 1e-8);
        let s = ipm_solve(&form, &cfg).unwrap();
        assert!(s.subsolve.is_some());
        // The residual after 8 steps is exactly tol2 in exact arithmetic, so
        // rounding decides between 8 and 9 steps on both paths.
        assert!(matches!(s.iterations(), 8 | 9));
        assert!(close(&s.u, &[1.0, 3.0], 1.1e-8));
        let exact = ipm_solve_with_riesz(&form, &cfg, form.g_preimage.as_ref().unwrap()).unwrap();
        assert!(matches!(exact.iterations(), 8 | 9));
        for r in &exact.main.records {
            let expect = 0.1f64.powi(r.iter as i32);
            assert!((r.residual - expect).abs() <= 1e-6 * expect);
        }
        assert!((s.pressure.materialize(&toy_problem().dc)[0] + 1.0).abs() < 2e-8);
        assert!(matches!(ipm_solve(&form, &cfg.with_tols(1e-8, 1e-8)), Err(Error::TolOrder { .. })));
        assert!(matches!(ipm_solve(&form, &cfg.with_lambda(3.0)), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn toy_propagation() {
        for n in 1..=5 {
            let d = check_error_propagation(&toy_problem(), &IpmConfig::new(9.0), n).unwrap();
            assert!(d.max() <= 1e-12, "{d:?}");
            if n == 1 {
                assert_eq!(d.u, 0.0);
            }
        }
    }
}
