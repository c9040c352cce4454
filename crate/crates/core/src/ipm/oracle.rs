use serde::Serialize;

use super::IpmConfig;
use crate::constants::{dz_spectrum, AsDivGram, DzSpectrum};
use crate::error::Result;

/// First mode against the rest, for one error metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeSplit {
    pub first: f64,
    pub rest: f64,
}

/// Closed-form errors of the two-parameter iteration.
#[derive(Debug, Clone, Serialize)]
pub struct SpdErrorPrediction {
    pub lambda: f64,
    pub rho: f64,
    pub sigmas: Vec<f64>,
    /// `c_j = F(z̃_j) − σ_j⁻¹G(ψ_j)`.
    pub coefficients: Vec<f64>,
    /// `‖p_X‖_Q`, the pressure error before the first step.
    pub p_x_norm: f64,
    /// Entry `n − 1` holds the prediction after `n` steps.
    pub u_a: Vec<f64>,
    pub p_q: Vec<f64>,
    pub div_q: Vec<f64>,
    pub split_u_a: Vec<ModeSplit>,
    pub split_p_q: Vec<ModeSplit>,
    pub split_div_q: Vec<ModeSplit>,
    /// Asymptotic contraction `max_j |(1 + (λ−ρ)σ_j²)/(1 + λσ_j²)|`.
    pub rate: f64,
}

impl SpdErrorPrediction {
    /// First `n` whose predicted residual is below `tol`.
    pub fn predicted_iterations(&self, tol: f64) -> Option<usize> {
        self.div_q.iter().position(|&r| r < tol).map(|i| i + 1)
    }
}

/// Predicted errors for `n = 1..=n_max`; only for class (A3).
pub fn spd_error_oracle<P: AsDivGram + ?Sized>(p: &P, cfg: &IpmConfig, n_max: usize) -> Result<SpdErrorPrediction> {
    let form = p.div_gram()?;
    let spec = dz_spectrum(form.as_ref())?;
    Ok(predict(&spec, &form.f, &form.gd, cfg.lambda, cfg.rho, n_max))
}

pub(crate) fn predict(spec: &DzSpectrum, f: &[f64], gd: &[f64], lambda: f64, rho: f64, n_max: usize) -> SpdErrorPrediction {
    let c = spec.mode_coefficients(f, gd);
    let s = &spec.sigmas;
    let p_x_norm = s.iter().zip(&c).map(|(s, c)| (c / s).powi(2)).sum::<f64>().sqrt();
    // Per mode: contraction r_j and the factor 1/(1 + λσ²) of the velocity error.
    let ratio: Vec<f64> = s.iter().map(|s| (1.0 + (lambda - rho) * s * s) / (1.0 + lambda * s * s)).collect();
    let first: Vec<f64> = s.iter().map(|s| 1.0 / (1.0 + lambda * s * s)).collect();
    let mut out = SpdErrorPrediction {
        lambda,
        rho,
        sigmas: s.clone(),
        coefficients: c.clone(),
        p_x_norm,
        u_a: Vec::with_capacity(n_max),
        p_q: Vec::with_capacity(n_max),
        div_q: Vec::with_capacity(n_max),
        split_u_a: Vec::with_capacity(n_max),
        split_p_q: Vec::with_capacity(n_max),
        split_div_q: Vec::with_capacity(n_max),
        rate: ratio.iter().fold(0.0f64, |m, r| m.max(r.abs())),
    };
    for n in 1..=n_max {
        let mut terms_u = Vec::with_capacity(s.len());
        let mut terms_p = Vec::with_capacity(s.len());
        let mut terms_d = Vec::with_capacity(s.len());
        for j in 0..s.len() {
            let rn1 = ratio[j].abs().powi(n as i32 - 1);
            let eu = rn1 * first[j] * c[j].abs();
            terms_u.push(eu);
            terms_p.push(rn1 * ratio[j].abs() * c[j].abs() / s[j]);
            terms_d.push(s[j] * eu);
        }
        for (terms, total, split) in [
            (&terms_u, &mut out.u_a, &mut out.split_u_a),
            (&terms_p, &mut out.p_q, &mut out.split_p_q),
            (&terms_d, &mut out.div_q, &mut out.split_div_q),
        ] {
            total.push(terms.iter().map(|t| t * t).sum::<f64>().sqrt());
            let rest = terms.iter().skip(1).map(|t| t * t).sum::<f64>().sqrt();
            split.push(ModeSplit { first: terms.first().copied().unwrap_or(0.0), rest });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::toy_problem;

    #[test]
    fn toy_predictions() {
        let pr = spd_error_oracle(&toy_problem(), &IpmConfig::new(9.0), 5).unwrap();
        for n in 1..=5 {
            let expect = 0.1f64.powi(n as i32);
            assert!((pr.p_q[n - 1] - expect).abs() <= 1e-15 * expect.max(1e-300) + 1e-17);
            assert_eq!(pr.split_p_q[n - 1].rest, 0.0);
        }
        assert!((pr.rate - 0.1).abs() < 1e-16);
        assert_eq!(pr.p_x_norm, 1.0);
    }

    #[test]
    fn zero_loads_predict_zero() {
        let t = toy_problem().with_loads(vec![0.0, 0.0], vec![0.0]).unwrap();
        let pr = spd_error_oracle(&t, &IpmConfig::new(9.0), 3).unwrap();
        assert!(pr.u_a.iter().chain(&pr.p_q).chain(&pr.div_q).all(|&v| v == 0.0));
    }
}
