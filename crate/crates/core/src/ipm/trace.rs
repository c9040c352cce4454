use std::io::Write;

use serde::Serialize;

use super::SpdErrorPrediction;
use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::linalg::{self, factor_spd, DenseMatrix};
use crate::problem::{kkt_solve, DivGramForm, Pressure, SaddleProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    Converged,
    MaxIters,
}

/// State after one iteration.
#[derive(Debug, Clone)]
pub struct IterRecord {
    /// 1-based.
    pub iter: usize,
    pub u: Vec<f64>,
    pub pressure: Pressure,
    /// `‖Duⁿ − g‖_Q` for the target `g` of the run.
    pub residual: f64,
    pub err_u_v: Option<f64>,
    pub err_u_a: Option<f64>,
    pub err_p_q: Option<f64>,
}

impl IterRecord {
    pub(crate) fn new(iter: usize, u: Vec<f64>, pressure: Pressure, residual: f64) -> Self {
        IterRecord { iter, u, pressure, residual, err_u_v: None, err_u_a: None, err_p_q: None }
    }

    pub fn pressure_coefficients(&self) -> Option<&[f64]> {
        match &self.pressure {
            Pressure::Coefficients(p) => Some(p),
            Pressure::Represented(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IpmTrace {
    pub records: Vec<IterRecord>,
    pub termination: Termination,
    /// Stopping tolerance of the run.
    pub tol: f64,
}

impl IpmTrace {
    pub fn last(&self) -> Option<&IterRecord> {
        self.records.last()
    }

    pub fn final_residual(&self) -> f64 {
        self.last().map_or(f64::NAN, |r| r.residual)
    }

    pub fn ensure_converged(&self) -> Result<()> {
        match self.termination {
            Termination::Converged => Ok(()),
            Termination::MaxIters => {
                Err(Error::MaxIters { iterations: self.records.len(), residual: self.final_residual() })
            }
        }
    }

    /// Fills the error columns against `reference`.
    ///
    /// Explicit pressures need `reference.p`; represented ones are compared
    /// through `reference.p` and `dc` when both are present, else through
    /// `reference.p_preimage` and the form.
    pub fn annotate(&mut self, form: &DivGramForm, reference: &ReferenceSolution, q: Option<QGeometry<'_>>) {
        for r in &mut self.records {
            let e = linalg::sub(&r.u, &reference.u);
            r.err_u_v = Some(form.v_norm(&e));
            r.err_u_a = Some(form.a_norm(&e));
            r.err_p_q = match (&r.pressure, q, &reference.p, &reference.p_preimage) {
                (Pressure::Coefficients(pc), Some(g), Some(px), _) => Some(g.norm(&linalg::sub(pc, px))),
                (Pressure::Represented(rep), Some(g), Some(px), _) => {
                    Some(g.norm(&linalg::sub(&rep.materialize(g.dc), px)))
                }
                (Pressure::Represented(rep), _, _, Some(yp)) => {
                    let s = rep.n_it as f64 * rep.rho;
                    Some(match &form.k_root {
                        Some(root) => {
                            // Apply the factor to each part before combining.
                            let rw = root.matvec(&rep.w);
                            let ry = root.matvec(&rep.y);
                            let rp = root.matvec(yp);
                            linalg::norm2(&(0..rw.len()).map(|i| rw[i] - s * ry[i] - rp[i]).collect::<Vec<_>>())
                        }
                        None => form.d_norm(&linalg::sub(&rep.preimage(), yp)),
                    })
                }
                _ => None,
            };
        }
    }
}

/// Q basis data needed to measure explicit pressures.
#[derive(Debug, Clone, Copy)]
pub struct QGeometry<'a> {
    pub dc: &'a DenseMatrix,
    pub m_q: &'a DenseMatrix,
}

impl QGeometry<'_> {
    pub fn of(p: &SaddleProblem) -> QGeometry<'_> {
        QGeometry { dc: &p.dc, m_q: &p.m_q }
    }

    fn norm(&self, q: &[f64]) -> f64 {
        linalg::gram_norm(self.m_q, q)
    }
}

/// Exact solution used to measure iterate errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub u: Vec<f64>,
    /// Q coefficients of `p_X`.
    pub p: Option<Vec<f64>>,
    /// A V-vector `y_p` with `D y_p = p_X`.
    pub p_preimage: Option<Vec<f64>>,
}

impl ReferenceSolution {
    /// Reference from the direct saddle point solve, with the `M_V`-minimal
    /// pressure preimage.
    pub fn from_problem(p: &SaddleProblem) -> Result<Self> {
        let sol = kkt_solve(p, 0.0)?;
        let px = sol.p().unwrap_or(&[]).to_vec();
        let preimage = if p.m == 0 {
            vec![0.0; p.n]
        } else {
            let mv = factor_spd(&p.m_v)?;
            let x = mv.solve_matrix(&p.dc.transpose());
            let s = p.dc.matmul(&x).sym_part();
            x.matvec(&factor_spd(&s)?.solve(&px))
        };
        Ok(ReferenceSolution { u: sol.u, p: Some(px), p_preimage: Some(preimage) })
    }
}

/// Writes the trace as CSV; prediction columns stay empty without an oracle.
pub fn write_trace_csv<W: Write>(out: W, trace: &IpmTrace, prediction: Option<&SpdErrorPrediction>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let map = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["iter", "residual_Q", "err_u_V", "err_u_a", "err_p_Q", "predicted_u_a", "predicted_p_Q"])
        .map_err(map)?;
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    for r in &trace.records {
        let (pu, pp) = match prediction {
            Some(p) => (p.u_a.get(r.iter - 1).copied(), p.p_q.get(r.iter - 1).copied()),
            None => (None, None),
        };
        w.write_record([
            r.iter.to_string(),
            fmt_f64(r.residual),
            opt(r.err_u_v),
            opt(r.err_u_a),
            opt(r.err_p_q),
            opt(pu),
            opt(pp),
        ])
        .map_err(map)?;
    }
    w.flush()?;
    Ok(())
}
