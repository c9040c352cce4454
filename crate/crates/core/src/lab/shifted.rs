use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::synthetic::gen_shifted;
use crate::constants::{classify_assumption, AssumptionClass};
use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::ipm::{ipm_solve, IpmConfig, Termination};
use crate::linalg::DenseMatrix;
use crate::problem::{to_div_gram, SaddleProblem};

/// Ratios `ω²/λ_min` bracketing the smallest kernel eigenvalue.
pub const SHIFT_TAUS: [f64; 6] = [0.9, 0.95, 0.975, 1.025, 1.05, 1.1];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftedRow {
    pub tau: f64,
    pub omega2: f64,
    pub class: AssumptionClass,
    pub iterations: usize,
    pub termination: Termination,
    pub final_residual: f64,
}

/// The base operator of the shifted study: `n = 8`, `m = 4`, unit singular
/// values of `D`, and in `[W Z]` coordinates `A₀ = diag(3, 3.5, 4, 4.5 | 1, 2, 3, 4)`
/// plus a coupling `1.5` between the first complement axis and the lowest
/// kernel axis. `A₀` is SPD and `λ_min(A₀|_Z) = 1`.
pub fn shifted_base(seed: u64) -> Result<SaddleProblem> {
    let mut a = DenseMatrix::from_diag(&[3.0, 3.5, 4.0, 4.5, 1.0, 2.0, 3.0, 4.0]);
    a[(0, 4)] = 1.5;
    a[(4, 0)] = 1.5;
    Ok(super::gen_in_coordinates(vec![1.0; 4], &a, seed)?.problem)
}

/// Runs the basis-free method on `A₀ − τλ_min M` for each `τ`, where
/// `λ_min` is the smallest eigenvalue of `(A₀|_Z, M|_Z)`.
pub fn shifted_study(base: &SaddleProblem, m: &DenseMatrix, taus: &[f64], cfg: &IpmConfig) -> Result<Vec<ShiftedRow>> {
    let lam = gen_shifted(base, m, &[])?.lambda_min();
    if !lam.is_finite() {
        return Err(Error::NotApplicable("trivial kernel: nothing to shift towards".into()));
    }
    let omega2: Vec<f64> = taus.iter().map(|t| t * lam).collect();
    let fam = gen_shifted(base, m, &omega2)?;
    fam.members
        .par_iter()
        .zip(taus)
        .map(|((w2, p), &tau)| {
            let sol = ipm_solve(&to_div_gram(p)?, cfg)?;
            Ok(ShiftedRow {
                tau,
                omega2: *w2,
                class: classify_assumption(p)?.class,
                iterations: sol.iterations(),
                termination: sol.termination(),
                final_residual: sol.main.final_residual(),
            })
        })
        .collect()
}

pub fn write_shifted_csv<W: Write>(out: W, rows: &[ShiftedRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let map = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["tau", "omega2", "class", "iterations", "termination", "final_residual_Q"]).map_err(map)?;
    for r in rows {
        w.write_record([
            fmt_f64(r.tau),
            fmt_f64(r.omega2),
            r.class.to_string(),
            r.iterations.to_string(),
            format!("{:?}", r.termination),
            fmt_f64(r.final_residual),
        ])
        .map_err(map)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_grow_towards_the_eigenvalue() {
        for seed in 0..3 {
            let base = shifted_base(seed).unwrap();
            let rows = shifted_study(&base, &DenseMatrix::identity(8), &SHIFT_TAUS, &IpmConfig::new(1e3)).unwrap();
            assert!(rows.iter().all(|r| r.termination == Termination::Converged));
            let n: Vec<usize> = rows.iter().map(|r| r.iterations).collect();
            assert!(n[0] < n[1] && n[1] < n[2], "{n:?}");
            assert!(n[3] > n[4] && n[4] > n[5], "{n:?}");
        }
    }

    #[test]
    fn base_is_spd_with_unit_kernel_eigenvalue() {
        let base = shifted_base(0).unwrap();
        assert_eq!(classify_assumption(&base).unwrap().class, AssumptionClass::A3);
        let fam = gen_shifted(&base, &DenseMatrix::identity(8), &[]).unwrap();
        assert!((fam.lambda_min() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_has_a_row_per_tau() {
        let rows = shifted_study(&shifted_base(1).unwrap(), &DenseMatrix::identity(8), &[0.5, 1.5], &IpmConfig::new(1e3)).unwrap();
        let mut buf = Vec::new();
        write_shifted_csv(&mut buf, &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }
}
