use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use rayon::prelude::*;
use serde::Serialize;

use super::synthetic::{gen_synthetic_factored, AKind, SyntheticProblem, SyntheticSpec};
use crate::constants::{classify_assumption, dz_spectrum, AssumptionClass};
use crate::error::{Error, Result};
use crate::format::{fmt_f64, fmt_opt};
use crate::ipm::{ipm_solve, oracle_predict, IpmConfig, IpmTrace, QGeometry, ReferenceSolution, Termination};
use crate::problem::{to_div_gram, SaddleProblem};

/// A terminated run is flagged when its pressure error exceeds this fraction of `‖p_X‖_Q`.
pub const FLAG_REL_PRESSURE: f64 = 1e-3;

/// Loads for the β sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LoadKind {
    /// `G = 0` and `F = c₁ w₁ + Σ_{j≥2} e_j w_j + (kernel part)`, with `e_j`
    /// uniform in `[−1, 1]`; with `A = I` the first mode coefficient is `c₁`.
    FirstMode { c1: f64 },
    /// The seeded Gaussian loads of the generator.
    Generated,
}

/// Fixed part of a β sweep: all but the first singular value, the loads and the seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSetup {
    pub n: usize,
    /// `σ₂ … σ_m`; the swept `δ` is prepended as `σ₁`.
    pub other_sigmas: Vec<f64>,
    pub load: LoadKind,
    pub seed: u64,
}

impl Default for SweepSetup {
    fn default() -> Self {
        SweepSetup {
            n: 12,
            other_sigmas: vec![0.5, 0.6, 0.7, 0.8, 1.0],
            load: LoadKind::FirstMode { c1: 5e-3 },
            seed: 2024,
        }
    }
}

impl SweepSetup {
    /// Problem with `σ₁ = δ` and `A = I`.
    pub fn problem(&self, delta: f64) -> Result<SyntheticProblem> {
        let mut sigmas = vec![delta];
        sigmas.extend_from_slice(&self.other_sigmas);
        let spec = SyntheticSpec::new(self.n, sigmas, AKind::Spd { lambda_min: 1.0, lambda_max: 1.0 }, self.seed);
        let s = gen_synthetic_factored(&spec)?;
        match self.load {
            LoadKind::Generated => Ok(s),
            LoadKind::FirstMode { c1 } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(1));
                let unit = Uniform::new_inclusive(-1.0, 1.0).expect("valid range");
                let mut e: Vec<f64> = (0..s.w.cols()).map(|_| unit.sample(&mut rng)).collect();
                e[0] = c1;
                let zc: Vec<f64> = (0..s.z.cols()).map(|_| unit.sample(&mut rng)).collect();
                let f = crate::linalg::add(&s.w.matvec(&e), &s.z.matvec(&zc));
                s.with_loads(f, vec![0.0; s.w.cols()])
            }
        }
    }
}

/// One grid point of the β sweep; errors are measured against the exact solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub delta: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub final_residual: f64,
    pub err_u_v: f64,
    pub err_u_a: f64,
    pub err_p_q: f64,
    pub p_x_norm: f64,
    /// Oracle values at the final iteration.
    pub predicted_residual: f64,
    pub predicted_err_u_a: f64,
    pub predicted_err_p_q: f64,
    /// First step whose predicted residual is below `tol2`, if any within the cap.
    pub predicted_iterations: Option<usize>,
    /// Terminated, yet the pressure error is not small.
    pub flagged: bool,
}

impl SweepRow {
    /// Whether the oracle alone says the run stops with a large pressure error.
    pub fn predicted_flag(&self, prediction_p_at_stop: f64) -> bool {
        self.predicted_iterations.is_some() && prediction_p_at_stop > FLAG_REL_PRESSURE * self.p_x_norm
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub config: IpmConfig,
    pub setup: SweepSetup,
    /// Ascending in `δ`.
    pub rows: Vec<SweepRow>,
}

/// The configuration of the β study: `λ = ρ = 10³`, `tol2 = 10⁻¹²`, cap `10³`.
pub fn sweep_config() -> IpmConfig {
    IpmConfig::new(1e3).with_tols(1e-13, 1e-12).with_max_iters(1000)
}

/// Runs the iteration for each `δ` in parallel and compares with the oracle.
pub fn sweep_beta(grid: &[f64], setup: &SweepSetup, cfg: &IpmConfig) -> Result<SweepReport> {
    let mut rows = grid.par_iter().map(|&d| sweep_point(d, setup, cfg)).collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.delta.total_cmp(&b.delta));
    Ok(SweepReport { config: *cfg, setup: setup.clone(), rows })
}

fn sweep_point(delta: f64, setup: &SweepSetup, cfg: &IpmConfig) -> Result<SweepRow> {
    let s = setup.problem(delta)?;
    let reference = s.exact_solution()?;
    let (trace, pred) = run_with_oracle(&s.problem, &reference, cfg)?;
    let last = trace.last().expect("at least one iteration");
    let n = last.iter;
    let p_x_norm = s.problem.q_norm(reference.p.as_ref().expect("explicit reference"));
    let err_p_q = last.err_p_q.unwrap_or(f64::NAN);
    let predicted_iterations = pred.predicted_iterations(cfg.tol2);
    let flagged = trace.termination == Termination::Converged && err_p_q > FLAG_REL_PRESSURE * p_x_norm;
    Ok(SweepRow {
        delta,
        iterations: n,
        termination: trace.termination,
        final_residual: last.residual,
        err_u_v: last.err_u_v.unwrap_or(f64::NAN),
        err_u_a: last.err_u_a.unwrap_or(f64::NAN),
        err_p_q,
        p_x_norm,
        predicted_residual: pred.div_q[n - 1],
        predicted_err_u_a: pred.u_a[n - 1],
        predicted_err_p_q: pred.p_q[n - 1],
        predicted_iterations,
        flagged,
    })
}

/// Runs the basis-free method, measures errors against `reference`, and
/// evaluates the oracle over the full iteration cap.
fn run_with_oracle(
    p: &SaddleProblem,
    reference: &ReferenceSolution,
    cfg: &IpmConfig,
) -> Result<(IpmTrace, crate::ipm::SpdErrorPrediction)> {
    let form = to_div_gram(p)?;
    let spec = dz_spectrum(&form)?;
    let sol = ipm_solve(&form, cfg)?;
    let mut trace = sol.main;
    trace.annotate(&form, reference, Some(QGeometry::of(p)));
    let pred = oracle_predict(&spec, &form.f, &form.gd, cfg.lambda, cfg.rho, cfg.max_iters);
    Ok((trace, pred))
}

pub fn write_sweep_csv<W: Write>(out: W, report: &SweepReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let map = |e: csv::Error| Error::Io(e.to_string());
    w.write_record([
        "delta",
        "iterations",
        "termination",
        "final_residual_Q",
        "err_u_V",
        "err_u_a",
        "err_p_Q",
        "p_X_Q",
        "predicted_residual_Q",
        "predicted_err_u_a",
        "predicted_err_p_Q",
        "predicted_iterations",
        "flagged",
    ])
    .map_err(map)?;
    for r in &report.rows {
        w.write_record([
            fmt_f64(r.delta),
            r.iterations.to_string(),
            format!("{:?}", r.termination),
            fmt_f64(r.final_residual),
            fmt_f64(r.err_u_v),
            fmt_f64(r.err_u_a),
            fmt_f64(r.err_p_q),
            fmt_f64(r.p_x_norm),
            fmt_f64(r.predicted_residual),
            fmt_f64(r.predicted_err_u_a),
            fmt_f64(r.predicted_err_p_q),
            r.predicted_iterations.map(|n| n.to_string()).unwrap_or_default(),
            r.flagged.to_string(),
        ])
        .map_err(map)?;
    }
    w.flush()?;
    Ok(())
}

/// Predicted first-mode and remaining-mode errors next to the measured totals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSplitRow {
    pub iter: usize,
    pub u_a_first: f64,
    pub u_a_rest: f64,
    pub p_q_first: f64,
    pub p_q_rest: f64,
    pub div_q_first: f64,
    pub div_q_rest: f64,
    pub measured_u_a: Option<f64>,
    pub measured_p_q: Option<f64>,
    pub measured_div_q: f64,
}

/// Mode split along the iteration, with errors against the direct solve.
pub fn mode_split_study(p: &SaddleProblem, cfg: &IpmConfig) -> Result<Vec<ModeSplitRow>> {
    if classify_assumption(p)?.class != AssumptionClass::A3 {
        return Err(Error::NotApplicable("the mode split needs a symmetric coercive operator".into()));
    }
    mode_split_study_with(p, &ReferenceSolution::from_problem(p)?, cfg)
}

/// [`mode_split_study`] against a caller-supplied reference.
pub fn mode_split_study_with(
    p: &SaddleProblem,
    reference: &ReferenceSolution,
    cfg: &IpmConfig,
) -> Result<Vec<ModeSplitRow>> {
    let (trace, pred) = run_with_oracle(p, reference, cfg)?;
    Ok(trace
        .records
        .iter()
        .map(|r| {
            let i = r.iter - 1;
            ModeSplitRow {
                iter: r.iter,
                u_a_first: pred.split_u_a[i].first,
                u_a_rest: pred.split_u_a[i].rest,
                p_q_first: pred.split_p_q[i].first,
                p_q_rest: pred.split_p_q[i].rest,
                div_q_first: pred.split_div_q[i].first,
                div_q_rest: pred.split_div_q[i].rest,
                measured_u_a: r.err_u_a,
                measured_p_q: r.err_p_q,
                measured_div_q: r.residual,
            }
        })
        .collect())
}

pub fn write_mode_split_csv<W: Write>(out: W, rows: &[ModeSplitRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let map = |e: csv::Error| Error::Io(e.to_string());
    w.write_record([
        "iter",
        "u_a_first",
        "u_a_rest",
        "p_Q_first",
        "p_Q_rest",
        "div_Q_first",
        "div_Q_rest",
        "measured_u_a",
        "measured_p_Q",
        "measured_div_Q",
    ])
    .map_err(map)?;
    for r in rows {
        w.write_record([
            r.iter.to_string(),
            fmt_f64(r.u_a_first),
            fmt_f64(r.u_a_rest),
            fmt_f64(r.p_q_first),
            fmt_f64(r.p_q_rest),
            fmt_f64(r.div_q_first),
            fmt_f64(r.div_q_rest),
            fmt_opt(r.measured_u_a),
            fmt_opt(r.measured_p_q),
            fmt_f64(r.measured_div_q),
        ])
        .map_err(map)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::toy_problem;

    #[test]
    fn toy_mode_split_has_one_mode() {
        let rows = mode_split_study(&toy_problem(), &IpmConfig::new(9.0).with_tols(1e-9, 1e-8)).unwrap();
        assert!(rows.iter().all(|r| r.u_a_rest == 0.0 && r.p_q_rest == 0.0 && r.div_q_rest == 0.0));
        assert!((rows[0].p_q_first - 0.1).abs() < 1e-15);
    }

    #[test]
    fn zero_loads_split_is_zero() {
        let t = toy_problem().with_loads(vec![0.0, 0.0], vec![0.0]).unwrap();
        let rows = mode_split_study(&t, &IpmConfig::new(9.0)).unwrap();
        assert!(rows.iter().all(|r| [r.u_a_first, r.u_a_rest, r.p_q_first, r.p_q_rest].iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn mode_split_rejects_other_classes() {
        let t = toy_problem().with_a(crate::linalg::DenseMatrix::from_diag(&[1.0, 0.0])).unwrap();
        assert!(matches!(mode_split_study(&t, &IpmConfig::new(9.0)), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn small_first_mode_freezes() {
        let setup = SweepSetup { n: 6, other_sigmas: vec![0.5, 1.0], ..SweepSetup::default() };
        let s = setup.problem(1e-6).unwrap();
        let cfg = IpmConfig::new(1e3).with_tols(1e-13, 1e-12).with_max_iters(8);
        let rows = mode_split_study_with(&s.problem, &s.exact_solution().unwrap(), &cfg).unwrap();
        assert_eq!(rows.len(), 8);
        for r in &rows[4..] {
            assert!(r.u_a_rest < 1e-12 && r.p_q_rest < 1e-10, "{r:?}");
        }
        let drift = (rows[0].p_q_first - rows[7].p_q_first).abs() / rows[0].p_q_first;
        assert!(drift < 1e-8);
    }

    #[test]
    fn sweep_rows_are_sorted_and_flagged_by_rule() {
        let rep = sweep_beta(&[1e-10, 1e-1, 1e-6], &SweepSetup::default(), &sweep_config()).unwrap();
        let deltas: Vec<f64> = rep.rows.iter().map(|r| r.delta).collect();
        assert_eq!(deltas, vec![1e-10, 1e-6, 1e-1]);
        assert!(rep.rows[0].flagged && rep.rows[0].termination == Termination::Converged);
        assert_eq!(rep.rows[1].termination, Termination::MaxIters);
        assert!(!rep.rows[2].flagged && rep.rows[2].termination == Termination::Converged);
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rep).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
    }
}
