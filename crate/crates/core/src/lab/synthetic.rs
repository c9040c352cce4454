use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::constants::AssumptionClass;
use crate::error::{Error, Result};
use crate::ipm::ReferenceSolution;
use crate::linalg::{self, solve_dense, DenseMatrix};
use crate::problem::SaddleProblem;

/// How the operator matrix `A` is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AKind {
    /// Symmetric with eigenvalues spread over `[lambda_min, lambda_max]`;
    /// exactly `lambda_min·I` when the bounds coincide.
    Spd { lambda_min: f64, lambda_max: f64 },
    /// `A₀ − ω²I` with `A₀` drawn as in `Spd`.
    Shifted { lambda_min: f64, lambda_max: f64, omega2: f64 },
    /// Symmetric part drawn as in `Spd`, plus a skew part of spectral norm `skew`.
    Nonsymmetric { lambda_min: f64, lambda_max: f64, skew: f64 },
    /// `A = Z S Zᵀ` with `S` spectrum in the bounds; vanishes on the complement of `Z`.
    RankDeficient { lambda_min: f64, lambda_max: f64 },
    /// `Z S Zᵀ + W T Wᵀ` plus a symmetric coupling of norm `coupling`
    /// between the two blocks. `S` has its spectrum spread over the kernel
    /// bounds (positive); `T` over the complement bounds, which may be negative.
    Block { kernel_min: f64, kernel_max: f64, complement_min: f64, complement_max: f64, coupling: f64 },
}

/// Recipe for a problem with dialed singular values of `D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub m: usize,
    /// Singular values of `Dc`, positive and ascending; `σ₁` is `β_X`.
    pub sigmas: Vec<f64>,
    pub a: AKind,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(n: usize, sigmas: Vec<f64>, a: AKind, seed: u64) -> Self {
        SyntheticSpec { n, m: sigmas.len(), sigmas, a, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.m != self.sigmas.len() {
            bad.push(format!("m = {} but {} singular values", self.m, self.sigmas.len()));
        }
        if self.n < self.m || self.n == 0 {
            bad.push(format!("need n ≥ m and n > 0 (n = {}, m = {})", self.n, self.m));
        }
        if self.sigmas.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            bad.push("singular values must be positive and finite".into());
        }
        if self.sigmas.windows(2).any(|w| w[0] > w[1]) {
            bad.push("singular values must be ascending".into());
        }
        let (lo, hi) = match self.a {
            AKind::Spd { lambda_min, lambda_max }
            | AKind::Shifted { lambda_min, lambda_max, .. }
            | AKind::Nonsymmetric { lambda_min, lambda_max, .. }
            | AKind::RankDeficient { lambda_min, lambda_max } => (lambda_min, lambda_max),
            AKind::Block { kernel_min, kernel_max, complement_min, complement_max, .. } => {
                if !(complement_min <= complement_max && complement_min.is_finite() && complement_max.is_finite()) {
                    bad.push("complement bounds must satisfy min ≤ max".into());
                }
                (kernel_min, kernel_max)
            }
        };
        if !(0.0 < lo && lo <= hi && hi.is_finite()) {
            bad.push(format!("spectral bounds must satisfy 0 < min ≤ max, got [{lo}, {hi}]"));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(bad.join("; ")))
        }
    }
}

/// A generated problem together with the factors it was built from.
///
/// `Dc = U·diag(σ)·Wᵀ`, and `[W Z]` is orthogonal, so `Z` spans `ker D`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticProblem {
    pub problem: SaddleProblem,
    pub u: DenseMatrix,
    pub w: DenseMatrix,
    pub z: DenseMatrix,
    pub sigmas: Vec<f64>,
}

impl SyntheticProblem {
    /// Solution of the saddle point problem through the factors.
    ///
    /// Small singular values appear only as explicit divisions, so the result
    /// stays accurate where the assembled system is too ill-conditioned to solve.
    pub fn exact_solution(&self) -> Result<ReferenceSolution> {
        let p = &self.problem;
        let g = self.u.tr_matvec(&p.gq);
        let range: Vec<f64> = g.iter().zip(&self.sigmas).map(|(g, s)| g / s).collect();
        let u_w = self.w.matvec(&range);
        let mut u = u_w.clone();
        if self.z.cols() > 0 {
            let rhs = self.z.tr_matvec(&linalg::sub(&p.f, &p.a.matvec(&u_w)));
            let zc = solve_dense(&p.a.congruence(&self.z), &rhs)?;
            linalg::axpy(1.0, &self.z.matvec(&zc), &mut u);
        }
        let resid = self.w.tr_matvec(&linalg::sub(&p.f, &p.a.matvec(&u)));
        let coef: Vec<f64> = resid.iter().zip(&self.sigmas).map(|(r, s)| r / s).collect();
        let pq = self.u.matvec(&coef);
        let y: Vec<f64> = coef.iter().zip(&self.sigmas).map(|(c, s)| c / s).collect();
        Ok(ReferenceSolution { u, p: Some(pq), p_preimage: Some(self.w.matvec(&y)) })
    }

    /// Same factors, new loads.
    pub fn with_loads(&self, f: Vec<f64>, gq: Vec<f64>) -> Result<Self> {
        Ok(SyntheticProblem { problem: self.problem.with_loads(f, gq)?, ..self.clone() })
    }
}

/// Orthonormal columns of `g` by modified Gram-Schmidt, applied twice.
fn orthonormalize(g: &DenseMatrix) -> DenseMatrix {
    let mut cols = g.columns();
    for j in 0..cols.len() {
        for _ in 0..2 {
            for i in 0..j {
                let r = linalg::dot(&cols[i], &cols[j]);
                let ci = cols[i].clone();
                linalg::axpy(-r, &ci, &mut cols[j]);
            }
        }
        let nrm = linalg::norm2(&cols[j]);
        cols[j].iter_mut().for_each(|v| *v /= nrm);
    }
    DenseMatrix::from_columns(g.rows(), &cols)
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
    DenseMatrix::from_row_major(rows, cols, data).expect("shape matches data")
}

fn orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    orthonormalize(&gaussian(rng, n, n))
}

/// `k` values spread evenly over `[lo, hi]`.
fn spread(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect(),
    }
}

/// `Q diag(λ) Qᵀ` for a random orthogonal `Q`, or `λ I` when the spectrum is flat.
fn symmetric_with_spectrum(rng: &mut ChaCha8Rng, lo: f64, hi: f64, n: usize) -> DenseMatrix {
    if lo == hi {
        return DenseMatrix::identity(n).scale(lo);
    }
    let q = orthogonal(rng, n);
    DenseMatrix::from_diag(&spread(lo, hi, n)).congruence(&q.transpose())
}

/// Builds the problem described by `spec`, with seeded Gaussian loads.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<SaddleProblem> {
    Ok(gen_synthetic_factored(spec)?.problem)
}

/// [`gen_synthetic`] together with its factors.
pub fn gen_synthetic_factored(spec: &SyntheticSpec) -> Result<SyntheticProblem> {
    spec.validate()?;
    let (n, m) = (spec.n, spec.m);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let u = orthogonal(&mut rng, m);
    let vfull = orthogonal(&mut rng, n);
    let w = vfull.select_columns(&(0..m).collect::<Vec<_>>());
    let z = vfull.select_columns(&(m..n).collect::<Vec<_>>());
    let dc = u.matmul(&DenseMatrix::from_diag(&spec.sigmas)).matmul(&w.transpose());
    let a = match spec.a {
        AKind::Spd { lambda_min, lambda_max } => symmetric_with_spectrum(&mut rng, lambda_min, lambda_max, n),
        AKind::Shifted { lambda_min, lambda_max, omega2 } => {
            symmetric_with_spectrum(&mut rng, lambda_min, lambda_max, n).lin_comb(1.0, &DenseMatrix::identity(n), -omega2)
        }
        AKind::Nonsymmetric { lambda_min, lambda_max, skew } => {
            let s = symmetric_with_spectrum(&mut rng, lambda_min, lambda_max, n);
            let g = gaussian(&mut rng, n, n);
            let k = g.sub(&g.transpose());
            let nrm = linalg::singular_values(&k).last().copied().unwrap_or(0.0);
            if nrm > 0.0 {
                s.add(&k.scale(skew / nrm))
            } else {
                s
            }
        }
        AKind::RankDeficient { lambda_min, lambda_max } => {
            symmetric_with_spectrum(&mut rng, lambda_min, lambda_max, n - m).congruence(&z.transpose())
        }
        AKind::Block { kernel_min, kernel_max, complement_min, complement_max, coupling } => {
            let s = symmetric_with_spectrum(&mut rng, kernel_min, kernel_max, n - m).congruence(&z.transpose());
            let t = symmetric_with_spectrum(&mut rng, complement_min, complement_max, m).congruence(&w.transpose());
            let c = gaussian(&mut rng, m, n - m);
            let cn = linalg::singular_values(&c).last().copied().unwrap_or(0.0);
            let mut a = s.add(&t);
            if cn > 0.0 {
                let cross = w.matmul(&c.scale(coupling / cn)).matmul(&z.transpose());
                a = a.add(&cross).add(&cross.transpose());
            }
            a
        }
    };
    let f: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let gq: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
    let problem = SaddleProblem::new(a, dc, DenseMatrix::identity(n), DenseMatrix::identity(m), f, gq)?;
    Ok(SyntheticProblem { problem, u, w, z, sigmas: spec.sigmas.clone() })
}

/// Problem with `A = V Â Vᵀ` for `V = [W Z]`, so `Â` is the operator in
/// coordinates where the first `m` axes span the complement of the kernel.
pub fn gen_in_coordinates(sigmas: Vec<f64>, a_hat: &DenseMatrix, seed: u64) -> Result<SyntheticProblem> {
    let n = a_hat.rows();
    let spec = SyntheticSpec::new(n, sigmas, AKind::Spd { lambda_min: 1.0, lambda_max: 1.0 }, seed);
    let s = gen_synthetic_factored(&spec)?;
    let mut cols = s.w.columns();
    cols.extend(s.z.columns());
    let v = DenseMatrix::from_columns(n, &cols);
    let problem = s.problem.with_a(a_hat.congruence(&v.transpose()))?;
    Ok(SyntheticProblem { problem, ..s })
}

/// A random problem of the given assumption class.
///
/// Dimensions satisfy `2 ≤ m < n ≤ n_max`; singular values lie in
/// `[0.3, 1.5]`. Class `NONE` comes out symmetric indefinite but coercive on
/// the kernel, so `α_X > 0` and `ρ₀` is finite.
pub fn gen_class(class: AssumptionClass, n_max: usize, seed: u64) -> Result<SyntheticProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c1a5);
    let n_max = n_max.max(3);
    let n = Uniform::new_inclusive(3, n_max).expect("valid range").sample(&mut rng);
    let m = Uniform::new_inclusive(1, n - 1).expect("valid range").sample(&mut rng).max(2).min(n - 1);
    let unit = Uniform::new(0.0, 1.0).expect("valid range");
    let mut sigmas: Vec<f64> = (0..m).map(|_| 0.3 + 1.2 * unit.sample(&mut rng)).collect();
    sigmas.sort_by(f64::total_cmp);
    let lo = 0.5 + unit.sample(&mut rng);
    let hi = lo * (1.0 + 4.0 * unit.sample(&mut rng));
    let a = match class {
        AssumptionClass::A3 => AKind::Spd { lambda_min: lo, lambda_max: hi },
        AssumptionClass::A1 => AKind::RankDeficient { lambda_min: lo, lambda_max: hi },
        AssumptionClass::A2 => AKind::Nonsymmetric { lambda_min: lo, lambda_max: hi, skew: 0.5 * hi },
        AssumptionClass::None => AKind::Block {
            kernel_min: lo,
            kernel_max: hi,
            complement_min: -lo,
            complement_max: -0.2 * lo,
            coupling: 0.2 * lo,
        },
    };
    gen_synthetic_factored(&SyntheticSpec::new(n, sigmas, a, seed))
}

/// The `3×3` family `A = diag(α₀, α₁)`, `Dc = (0 β)`, identity Grams.
#[derive(Debug, Clone, PartialEq)]
pub struct Example31 {
    pub problem: SaddleProblem,
    /// `ε* = −β²/α₁` when `α₁ < 0`: the penalty system is singular there.
    pub singular_eps: Option<f64>,
}

/// Loads are `F = (1, 1)`, `G = 1`.
pub fn gen_example31(alpha0: f64, alpha1: f64, beta: f64) -> Result<Example31> {
    if !(beta > 0.0) {
        return Err(Error::InvalidConfig(format!("beta must be positive, got {beta}")));
    }
    let problem = SaddleProblem::new(
        DenseMatrix::from_diag(&[alpha0, alpha1]),
        DenseMatrix::from_rows(&[vec![0.0, beta]])?,
        DenseMatrix::identity(2),
        DenseMatrix::identity(1),
        vec![1.0, 1.0],
        vec![1.0],
    )?;
    let singular_eps = (alpha1 < 0.0).then(|| -beta * beta / alpha1);
    Ok(Example31 { problem, singular_eps })
}

/// `A(ω) = A₀ − ω²M` over a grid of `ω²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedFamily {
    /// Eigenvalues of `(A₀|_Z, M|_Z)`, ascending.
    pub kernel_eigenvalues: Vec<f64>,
    pub members: Vec<(f64, SaddleProblem)>,
}

impl ShiftedFamily {
    pub fn lambda_min(&self) -> f64 {
        self.kernel_eigenvalues.first().copied().unwrap_or(f64::INFINITY)
    }
}

/// Shifts the operator of `base` (taken as `A₀`) by `−ω²M` for each grid value.
pub fn gen_shifted(base: &SaddleProblem, m: &DenseMatrix, omega2: &[f64]) -> Result<ShiftedFamily> {
    let form = crate::problem::to_div_gram(base)?;
    let z = crate::constants::kernel_basis(&form)?;
    let kernel_eigenvalues = if z.cols() == 0 {
        Vec::new()
    } else {
        crate::linalg::sym_generalized_eig(&base.a.congruence(&z), &m.congruence(&z))?.eigenvalues
    };
    let members = omega2
        .iter()
        .map(|&w2| Ok((w2, base.with_a(base.a.lin_comb(1.0, m, -w2))?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ShiftedFamily { kernel_eigenvalues, members })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{classify_assumption, inf_sup_beta};
    use crate::penalty::{penalty_solve, PenaltyPath};
    use crate::problem::kkt_solve;

    fn spd(lo: f64, hi: f64) -> AKind {
        AKind::Spd { lambda_min: lo, lambda_max: hi }
    }

    #[test]
    fn canonical_case_is_the_toy_up_to_rotation() {
        let s = gen_synthetic_factored(&SyntheticSpec::new(2, vec![1.0], spd(1.0, 1.0), 4)).unwrap();
        assert_eq!(s.problem.a, DenseMatrix::identity(2));
        let sv = linalg::singular_values(&s.problem.dc);
        assert!((sv[0] - 1.0).abs() < 1e-15);
        assert_eq!(classify_assumption(&s.problem).unwrap().class, AssumptionClass::A3);
    }

    #[test]
    fn beta_is_dialed() {
        for (i, delta) in [1e-1, 1e-3, 1e-6, 1e-9, 1e-12].into_iter().enumerate() {
            let p = gen_synthetic(&SyntheticSpec::new(8, vec![delta, 0.5, 1.0], spd(1.0, 3.0), i as u64)).unwrap();
            let b = inf_sup_beta(&p).unwrap();
            // Rounding Dc = U Σ Wᵀ into dense storage moves σ₁ by about ε_mach·‖Dc‖.
            assert!((b - delta).abs() <= 1e-16, "{delta}: {b}");
            if delta >= 1e-6 {
                assert!((b - delta).abs() <= 1e-10 * delta, "{delta}: {b}");
            }
        }
    }

    #[test]
    fn reproducible_bits() {
        let spec = SyntheticSpec::new(9, vec![0.1, 0.2, 0.7], AKind::Nonsymmetric { lambda_min: 1.0, lambda_max: 2.0, skew: 0.3 }, 11);
        assert_eq!(gen_synthetic(&spec).unwrap(), gen_synthetic(&spec).unwrap());
        let other = SyntheticSpec { seed: 12, ..spec.clone() };
        assert_ne!(gen_synthetic(&spec).unwrap(), gen_synthetic(&other).unwrap());
    }

    #[test]
    fn exact_solution_matches_direct_solve() {
        for class in [AssumptionClass::A3, AssumptionClass::A1, AssumptionClass::A2, AssumptionClass::None] {
            let s = gen_class(class, 10, 3).unwrap();
            let r = s.exact_solution().unwrap();
            let d = kkt_solve(&s.problem, 0.0).unwrap();
            assert!(linalg::norm2(&linalg::sub(&r.u, &d.u)) < 1e-10 * linalg::norm2(&d.u));
            let pd = d.p().unwrap();
            assert!(linalg::norm2(&linalg::sub(r.p.as_ref().unwrap(), pd)) < 1e-10 * linalg::norm2(pd));
            let dy = s.problem.dc.matvec(r.p_preimage.as_ref().unwrap());
            assert!(linalg::norm2(&linalg::sub(&dy, pd)) < 1e-10 * linalg::norm2(pd));
        }
    }

    #[test]
    fn classes_come_out_as_requested() {
        for class in [AssumptionClass::A3, AssumptionClass::A1, AssumptionClass::A2, AssumptionClass::None] {
            for seed in 0..5 {
                let s = gen_class(class, 12, seed).unwrap();
                assert_eq!(classify_assumption(&s.problem).unwrap().class, class, "seed {seed}");
            }
        }
    }

    #[test]
    fn rank_deficient_annihilates_complement() {
        let s = gen_synthetic_factored(&SyntheticSpec::new(6, vec![0.5, 1.0], AKind::RankDeficient { lambda_min: 1.0, lambda_max: 2.0 }, 2)).unwrap();
        assert!(s.problem.a.matmul(&s.w).max_abs() < 1e-14);
    }

    #[test]
    fn example31_family() {
        let e = gen_example31(1.0, -1.0, 1.0).unwrap();
        assert_eq!(e.singular_eps, Some(1.0));
        assert!(matches!(penalty_solve(&e.problem, 1.0, PenaltyPath::Coupled), Err(Error::SingularSystem { .. })));
        assert_eq!(gen_example31(1.0, -1.0, 2.0).unwrap().singular_eps, Some(4.0));
        let e = gen_example31(1.0, 1.0, 1.0).unwrap();
        assert_eq!(e.singular_eps, None);
        assert_eq!(classify_assumption(&e.problem).unwrap().class, AssumptionClass::A3);
        assert!(gen_example31(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn shifted_family_degrades() {
        let base = gen_synthetic(&SyntheticSpec::new(8, vec![0.5, 0.8, 1.0], spd(1.0, 4.0), 1)).unwrap();
        let lam = gen_shifted(&base, &DenseMatrix::identity(8), &[]).unwrap().lambda_min();
        let fam = gen_shifted(&base, &DenseMatrix::identity(8), &[0.0, lam]).unwrap();
        assert_eq!(classify_assumption(&fam.members[0].1).unwrap().class, AssumptionClass::A3);
        assert_eq!(classify_assumption(&fam.members[1].1).unwrap().class, AssumptionClass::None);
        assert!(matches!(kkt_solve(&fam.members[1].1, 0.0), Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn invalid_specs() {
        assert!(gen_synthetic(&SyntheticSpec::new(1, vec![1.0, 2.0], spd(1.0, 1.0), 0)).is_err());
        assert!(gen_synthetic(&SyntheticSpec::new(4, vec![2.0, 1.0], spd(1.0, 1.0), 0)).is_err());
        assert!(gen_synthetic(&SyntheticSpec::new(4, vec![0.0], spd(1.0, 1.0), 0)).is_err());
        assert!(gen_synthetic(&SyntheticSpec::new(4, vec![1.0], spd(2.0, 1.0), 0)).is_err());
    }
}
