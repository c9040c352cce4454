//! Assembled saddle point problems in explicit and pressure-basis-free form.

mod io;

pub use io::{parse_problem, problem_to_string, read_problem, read_problem_file, write_div_gram, write_problem, ProblemFile};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, factor_lu, factor_spd, rank, sym_generalized_eig, DenseMatrix};

/// Relative tolerance for the surjectivity (rank) check on `Dc`.
pub const RANK_REL_TOL: f64 = 1e-10;
/// Relative symmetry tolerance for the div-div Gram `K`.
pub const K_SYMMETRY_TOL: f64 = 1e-10;

/// Explicit assembled saddle point problem.
///
/// `a[(i, j)] = a(φ_j, φ_i)`, so `a(u, v) = vᵀ A u`. `dc` holds the constraint
/// map in the Q basis, `gq[i] = G(ψ_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleProblem {
    pub n: usize,
    pub m: usize,
    pub a: DenseMatrix,
    pub dc: DenseMatrix,
    pub m_v: DenseMatrix,
    pub m_q: DenseMatrix,
    pub f: Vec<f64>,
    pub gq: Vec<f64>,
}

impl SaddleProblem {
    /// Checks shapes only; see [`validate`] for the mathematical preconditions.
    pub fn new(
        a: DenseMatrix,
        dc: DenseMatrix,
        m_v: DenseMatrix,
        m_q: DenseMatrix,
        f: Vec<f64>,
        gq: Vec<f64>,
    ) -> Result<Self> {
        let n = a.rows();
        let m = dc.rows();
        let mut bad = Vec::new();
        if a.cols() != n {
            bad.push(format!("A is {}x{}, expected square", a.rows(), a.cols()));
        }
        if dc.cols() != n && !(m == 0 && dc.cols() == 0) {
            bad.push(format!("Dc is {}x{}, expected {m}x{n}", dc.rows(), dc.cols()));
        }
        if (m_v.rows(), m_v.cols()) != (n, n) {
            bad.push(format!("M_V is {}x{}, expected {n}x{n}", m_v.rows(), m_v.cols()));
        }
        if (m_q.rows(), m_q.cols()) != (m, m) {
            bad.push(format!("M_Q is {}x{}, expected {m}x{m}", m_q.rows(), m_q.cols()));
        }
        if f.len() != n {
            bad.push(format!("F has {} entries, expected {n}", f.len()));
        }
        if gq.len() != m {
            bad.push(format!("Gq has {} entries, expected {m}", gq.len()));
        }
        if f.iter().chain(&gq).any(|v| !v.is_finite()) {
            bad.push("loads contain non-finite entries".into());
        }
        if !bad.is_empty() {
            return Err(Error::DimensionMismatch(bad.join("; ")));
        }
        let dc = if m == 0 { DenseMatrix::zeros(0, n) } else { dc };
        Ok(SaddleProblem { n, m, a, dc, m_v, m_q, f, gq })
    }

    /// Same operators with new loads.
    pub fn with_loads(&self, f: Vec<f64>, gq: Vec<f64>) -> Result<Self> {
        Self::new(self.a.clone(), self.dc.clone(), self.m_v.clone(), self.m_q.clone(), f, gq)
    }

    /// Same data with a different operator matrix.
    pub fn with_a(&self, a: DenseMatrix) -> Result<Self> {
        Self::new(a, self.dc.clone(), self.m_v.clone(), self.m_q.clone(), self.f.clone(), self.gq.clone())
    }

    /// `‖v‖_V`.
    pub fn v_norm(&self, v: &[f64]) -> f64 {
        linalg::gram_norm(&self.m_v, v)
    }

    /// `‖q‖_Q` for Q coefficients.
    pub fn q_norm(&self, q: &[f64]) -> f64 {
        linalg::gram_norm(&self.m_q, q)
    }

    /// `|v|_a = sqrt(a(v, v))`, clamped at zero.
    pub fn a_norm(&self, v: &[f64]) -> f64 {
        self.a.quad(v).max(0.0).sqrt()
    }

    /// Residuals of both block equations relative to their natural scale.
    pub fn kkt_residuals(&self, u: &[f64], p: &[f64], eps: f64) -> (f64, f64) {
        let mq_p = self.m_q.matvec(p);
        let r1 = linalg::sub(&linalg::add(&self.a.matvec(u), &self.dc.tr_matvec(&mq_p)), &self.f);
        let s1 = self.a.frobenius_norm() * linalg::norm2(u)
            + self.dc.frobenius_norm() * linalg::norm2(&mq_p)
            + linalg::norm2(&self.f);
        let du = self.dc.matvec(u);
        let r2 = linalg::sub(&linalg::sub(&self.m_q.matvec(&du), &linalg::scale(eps, &mq_p)), &self.gq);
        let s2 = self.m_q.frobenius_norm() * (linalg::norm2(&du) + eps * linalg::norm2(p)) + linalg::norm2(&self.gq);
        (rel(linalg::norm2(&r1), s1), rel(linalg::norm2(&r2), s2))
    }
}

fn rel(r: f64, s: f64) -> f64 {
    if s == 0.0 {
        r
    } else {
        r / s
    }
}

/// Pressure-basis-free form: everything the basis-free iteration needs.
///
/// `k[(i, j)] = (Dφ_j, Dφ_i)_Q` and `gd[i] = G(Dφ_i)`. The optional `k_root`
/// is any matrix `R` with `RᵀR = K` (for example `L_Qᵀ Dc`, or an ambient
/// coboundary scaled by its weight factor); when present, Q-norms of `Dv`
/// are evaluated as `‖Rv‖` instead of through the quadratic form.
#[derive(Debug, Clone, PartialEq)]
pub struct DivGramForm {
    pub n: usize,
    pub a: DenseMatrix,
    pub m_v: DenseMatrix,
    pub k: DenseMatrix,
    pub f: Vec<f64>,
    pub gd: Vec<f64>,
    /// `dim Q` when known.
    pub m: Option<usize>,
    pub k_root: Option<DenseMatrix>,
    /// A V-vector `y` with `Dy = R_Q⁻¹G`, when one is known.
    pub g_preimage: Option<Vec<f64>>,
}

impl DivGramForm {
    pub fn new(a: DenseMatrix, m_v: DenseMatrix, k: DenseMatrix, f: Vec<f64>, gd: Vec<f64>) -> Result<Self> {
        let n = a.rows();
        let mut bad = Vec::new();
        for (name, mat) in [("A", &a), ("M_V", &m_v), ("K", &k)] {
            if (mat.rows(), mat.cols()) != (n, n) {
                bad.push(format!("{name} is {}x{}, expected {n}x{n}", mat.rows(), mat.cols()));
            }
        }
        if f.len() != n || gd.len() != n {
            bad.push(format!("F/gD lengths {}/{} differ from n = {n}", f.len(), gd.len()));
        }
        if !bad.is_empty() {
            return Err(Error::DimensionMismatch(bad.join("; ")));
        }
        if k.asymmetry() > K_SYMMETRY_TOL {
            return Err(Error::NotSymmetric { asymmetry: k.asymmetry() });
        }
        Ok(DivGramForm { n, a, m_v, k, f, gd, m: None, k_root: None, g_preimage: None })
    }

    /// Attaches a factor `R` with `RᵀR = K`.
    pub fn with_k_root(mut self, r: DenseMatrix) -> Result<Self> {
        if r.cols() != self.n {
            return Err(Error::DimensionMismatch(format!("K root has {} columns, expected {}", r.cols(), self.n)));
        }
        let dev = r.transpose().matmul(&r).sub(&self.k).frobenius_norm();
        if dev > 1e-10 * self.k.frobenius_norm().max(f64::MIN_POSITIVE) {
            return Err(Error::DimensionMismatch(format!("RᵀR differs from K by {dev:e}")));
        }
        self.k_root = Some(r);
        Ok(self)
    }

    pub fn with_loads(&self, f: Vec<f64>, gd: Vec<f64>) -> Result<Self> {
        if f.len() != self.n || gd.len() != self.n {
            return Err(Error::DimensionMismatch("load length differs from n".into()));
        }
        Ok(DivGramForm { f, gd, g_preimage: None, ..self.clone() })
    }

    /// Same form with a different operator matrix.
    pub fn with_a(&self, a: DenseMatrix) -> Result<Self> {
        if (a.rows(), a.cols()) != (self.n, self.n) {
            return Err(Error::DimensionMismatch("A has the wrong shape".into()));
        }
        Ok(DivGramForm { a, ..self.clone() })
    }

    /// `‖Dv‖_Q`, through the factor when available.
    pub fn d_norm(&self, v: &[f64]) -> f64 {
        match &self.k_root {
            Some(r) => linalg::norm2(&r.matvec(v)),
            None => linalg::gram_norm(&self.k, v),
        }
    }

    /// `(Dv, Dw)_Q`.
    pub fn d_inner(&self, v: &[f64], w: &[f64]) -> f64 {
        match &self.k_root {
            Some(r) => linalg::dot(&r.matvec(v), &r.matvec(w)),
            None => self.k.bilinear(w, v),
        }
    }

    pub fn v_norm(&self, v: &[f64]) -> f64 {
        linalg::gram_norm(&self.m_v, v)
    }

    pub fn a_norm(&self, v: &[f64]) -> f64 {
        self.a.quad(v).max(0.0).sqrt()
    }

    /// True when `G = 0` exactly.
    pub fn g_is_zero(&self) -> bool {
        self.gd.iter().all(|&v| v == 0.0)
    }
}

/// Pressure represented through V-vectors: `p = D w − n·ρ·D y`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PressureRep {
    pub w: Vec<f64>,
    pub y: Vec<f64>,
    pub n_it: usize,
    pub rho: f64,
}

impl PressureRep {
    /// A V-vector whose image under D is the pressure.
    pub fn preimage(&self) -> Vec<f64> {
        let s = self.n_it as f64 * self.rho;
        self.w.iter().zip(&self.y).map(|(w, y)| w - s * y).collect()
    }

    /// Q coefficients of the pressure, `Dc (w − nρ y)`.
    pub fn materialize(&self, dc: &DenseMatrix) -> Vec<f64> {
        // Apply Dc to each part separately: w and nρy are large and nearly cancel
        // only after D is applied.
        let dw = dc.matvec(&self.w);
        let dy = dc.matvec(&self.y);
        let s = self.n_it as f64 * self.rho;
        dw.iter().zip(&dy).map(|(a, b)| a - s * b).collect()
    }

    /// `‖p‖_Q` computed from the form alone.
    pub fn q_norm(&self, form: &DivGramForm) -> f64 {
        match &form.k_root {
            Some(r) => {
                let s = self.n_it as f64 * self.rho;
                let rw = r.matvec(&self.w);
                let ry = r.matvec(&self.y);
                linalg::norm2(&rw.iter().zip(&ry).map(|(a, b)| a - s * b).collect::<Vec<_>>())
            }
            None => form.d_norm(&self.preimage()),
        }
    }
}

/// Pressure part of a solution.
#[derive(Debug, Clone, PartialEq)]
pub enum Pressure {
    /// Coefficients in the Q basis.
    Coefficients(Vec<f64>),
    /// Basis-free representation.
    Represented(PressureRep),
}

/// Solution `(u, p)` of a saddle point or penalty problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleSolution {
    pub u: Vec<f64>,
    pub pressure: Pressure,
}

impl SaddleSolution {
    /// Q coefficients, if the pressure is held explicitly.
    pub fn p(&self) -> Option<&[f64]> {
        match &self.pressure {
            Pressure::Coefficients(p) => Some(p),
            Pressure::Represented(_) => None,
        }
    }

    /// Q coefficients, materializing a represented pressure through `dc`.
    pub fn p_coefficients(&self, dc: &DenseMatrix) -> Vec<f64> {
        match &self.pressure {
            Pressure::Coefficients(p) => p.clone(),
            Pressure::Represented(r) => r.materialize(dc),
        }
    }
}

/// Which complement of the kernel a split lands in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SplitVariant {
    /// `Z̃ = { v : a(v, z) = 0 ∀ z ∈ Z }`.
    Tilde,
    /// `Ẑ = { v : a(z, v) = 0 ∀ z ∈ Z }`.
    Hat,
}

/// `u = z + ž` with `z` in the kernel of D.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSplit {
    pub z: Vec<f64>,
    pub z_check: Vec<f64>,
    pub variant: SplitVariant,
}

/// Structural diagnostics of a problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub m_v_spd: bool,
    pub m_q_spd: bool,
    pub dc_rank: usize,
    pub a_symmetric: bool,
    /// Smallest eigenvalue of `(sym(A), M_V)`, when `M_V` is SPD.
    pub a_sym_lambda_min: Option<f64>,
    pub a_spd: bool,
}

/// Checks Gram definiteness, surjectivity of D and records properties of A.
pub fn validate(p: &SaddleProblem) -> Result<Diagnostics> {
    let mut failures = Vec::new();
    let m_v_spd = factor_spd(&p.m_v).is_ok();
    if !m_v_spd {
        failures.push("M_V is not SPD".to_string());
    }
    let m_q_spd = p.m == 0 || factor_spd(&p.m_q).is_ok();
    if !m_q_spd {
        failures.push("M_Q is not SPD".to_string());
    }
    let dc_rank = if p.m == 0 { 0 } else { rank(&p.dc, RANK_REL_TOL) };
    if dc_rank < p.m {
        failures.push(format!("rank deficient constraint: rank(Dc) = {dc_rank} < m = {}", p.m));
    }
    if p.m > p.n {
        failures.push(format!("m = {} exceeds n = {}", p.m, p.n));
    }
    let a_symmetric = p.a.asymmetry() <= 1e-10;
    let a_sym_lambda_min = if m_v_spd {
        sym_generalized_eig(&p.a.sym_part(), &p.m_v).ok().map(|s| s.min())
    } else {
        None
    };
    let a_spd = a_symmetric && a_sym_lambda_min.is_some_and(|l| l > 0.0);
    if failures.is_empty() {
        Ok(Diagnostics { m_v_spd, m_q_spd, dc_rank, a_symmetric, a_sym_lambda_min, a_spd })
    } else {
        Err(Error::Invalid(failures))
    }
}

/// `R_Q⁻¹G` in the Q basis: solves `M_Q q = Gq`.
pub fn riesz_q(p: &SaddleProblem) -> Result<Vec<f64>> {
    if p.m == 0 {
        return Ok(Vec::new());
    }
    Ok(factor_spd(&p.m_q)?.solve(&p.gq))
}

/// A V-vector `y` with `Dc y = R_Q⁻¹G`: the `M_V`-minimal preimage.
pub fn riesz_preimage(p: &SaddleProblem) -> Result<Vec<f64>> {
    if p.gq.iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; p.n]);
    }
    let g = riesz_q(p)?;
    let mv = factor_spd(&p.m_v)?;
    let mv_inv_dct = mv.solve_matrix(&p.dc.transpose());
    let s = p.dc.matmul(&mv_inv_dct);
    let t = factor_spd(&s.sym_part())?.solve(&g);
    Ok(mv_inv_dct.matvec(&t))
}

/// Pressure-basis-free form of an explicit problem.
///
/// Carries `R = L_Qᵀ Dc` as the factor of `K` and, when it can be computed, a
/// preimage of `R_Q⁻¹G`.
pub fn to_div_gram(p: &SaddleProblem) -> Result<DivGramForm> {
    let (k, root) = if p.m == 0 {
        (DenseMatrix::zeros(p.n, p.n), DenseMatrix::zeros(0, p.n))
    } else {
        let lq = factor_spd(&p.m_q)?;
        let r = lq.lower().transpose().matmul(&p.dc);
        (r.transpose().matmul(&r), r)
    };
    let gd = p.dc.tr_matvec(&p.gq);
    let mut form = DivGramForm::new(p.a.clone(), p.m_v.clone(), k, p.f.clone(), gd)?;
    form.m = Some(p.m);
    form.k_root = Some(root);
    form.g_preimage = riesz_preimage(p).ok();
    Ok(form)
}

/// Coupled solve of the penalty system with `(2,2)` block `−ε M_Q`.
///
/// `ε = 0` gives the reference saddle point solution.
pub fn kkt_solve(p: &SaddleProblem, eps: f64) -> Result<SaddleSolution> {
    kkt_solve_with_block(p, &p.m_q.scale(-eps))
}

/// Coupled solve with an arbitrary `(2,2)` block.
pub(crate) fn kkt_solve_with_block(p: &SaddleProblem, c22: &DenseMatrix) -> Result<SaddleSolution> {
    if p.m == 0 {
        let u = crate::linalg::solve_dense(&p.a, &p.f)?;
        return Ok(SaddleSolution { u, pressure: Pressure::Coefficients(Vec::new()) });
    }
    let b = p.m_q.matmul(&p.dc);
    let kkt = DenseMatrix::block(&p.a, &b.transpose(), &b, c22);
    let rhs: Vec<f64> = p.f.iter().chain(&p.gq).copied().collect();
    let x = factor_lu(&kkt)?.solve(&rhs);
    let (u, pr) = x.split_at(p.n);
    Ok(SaddleSolution { u: u.to_vec(), pressure: Pressure::Coefficients(pr.to_vec()) })
}

/// Replaces a constraint into an ambient space by its projection onto `span(Qbasis)`.
///
/// Loads are zero; attach them with [`SaddleProblem::with_loads`].
pub fn project_structure_preserving(
    a: &DenseMatrix,
    m_v: &DenseMatrix,
    d_amb: &DenseMatrix,
    m_amb: &DenseMatrix,
    qbasis: &DenseMatrix,
) -> Result<SaddleProblem> {
    let mcount = qbasis.cols();
    if qbasis.rows() != d_amb.rows() || m_amb.rows() != d_amb.rows() {
        return Err(Error::DimensionMismatch("ambient dimensions disagree".into()));
    }
    if rank(qbasis, RANK_REL_TOL) < mcount {
        return Err(Error::Invalid(vec!["Qbasis columns are linearly dependent".into()]));
    }
    let m_q = m_amb.congruence(qbasis);
    let rhs = qbasis.transpose().matmul(&m_amb.matmul(d_amb));
    let dc = factor_spd(&m_q.sym_part())?.solve_matrix(&rhs);
    let n = a.rows();
    SaddleProblem::new(a.clone(), dc, m_v.clone(), m_q, vec![0.0; n], vec![0.0; mcount])
}

/// The two-dimensional problem used throughout the examples:
/// `A = I`, `Dc = [0 1]`, identity Grams, `F = (1, 2)`, `G = (3)`.
pub fn toy_problem() -> SaddleProblem {
    SaddleProblem::new(
        DenseMatrix::identity(2),
        DenseMatrix::from_rows(&[vec![0.0, 1.0]]).expect("static shape"),
        DenseMatrix::identity(2),
        DenseMatrix::identity(1),
        vec![1.0, 2.0],
        vec![3.0],
    )
    .expect("static shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn toy_is_valid() {
        let d = validate(&toy_problem()).unwrap();
        assert!(d.a_symmetric && d.a_spd && d.m_v_spd && d.m_q_spd);
        assert_eq!(d.dc_rank, 1);
    }

    #[test]
    fn invalid_problems_are_itemized() {
        let t = toy_problem();
        let bad = SaddleProblem::new(t.a.clone(), DenseMatrix::zeros(1, 2), t.m_v.clone(), t.m_q.clone(), t.f.clone(), t.gq.clone())
            .unwrap();
        match validate(&bad) {
            Err(Error::Invalid(items)) => assert!(items[0].contains("rank deficient")),
            other => panic!("{other:?}"),
        }
        let bad = SaddleProblem::new(t.a.clone(), t.dc.clone(), t.m_v.clone(), DenseMatrix::from_diag(&[-1.0]), t.f.clone(), t.gq.clone())
            .unwrap();
        match validate(&bad) {
            Err(Error::Invalid(items)) => assert!(items.iter().any(|s| s.contains("M_Q is not SPD"))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn toy_div_gram() {
        let g = to_div_gram(&toy_problem()).unwrap();
        assert_eq!(g.k, DenseMatrix::from_diag(&[0.0, 1.0]));
        assert_eq!(g.gd, vec![0.0, 3.0]);
        assert_eq!(g.g_preimage, Some(vec![0.0, 3.0]));
    }

    #[test]
    fn identity_constraint_div_gram() {
        let p = SaddleProblem::new(
            DenseMatrix::identity(2),
            DenseMatrix::identity(2),
            DenseMatrix::identity(2),
            DenseMatrix::identity(2),
            vec![0.0, 0.0],
            vec![1.5, -2.0],
        )
        .unwrap();
        let g = to_div_gram(&p).unwrap();
        assert_eq!(g.k, DenseMatrix::identity(2));
        assert_eq!(g.gd, p.gq);
    }

    #[test]
    fn toy_kkt() {
        let t = toy_problem();
        let s = kkt_solve(&t, 0.0).unwrap();
        assert!(close(&s.u, &[1.0, 3.0], 1e-15));
        assert!(close(s.p().unwrap(), &[-1.0], 1e-15));
        let s = kkt_solve(&t, 0.5).unwrap();
        assert!(close(&s.u, &[1.0, 8.0 / 3.0], 1e-15));
        assert!(close(s.p().unwrap(), &[-2.0 / 3.0], 1e-15));
        let (r1, r2) = t.kkt_residuals(&s.u, s.p().unwrap(), 0.5);
        assert!(r1 < 1e-15 && r2 < 1e-15);
    }

    #[test]
    fn riesz_examples() {
        let t = toy_problem();
        assert_eq!(riesz_q(&t).unwrap(), vec![3.0]);
        let p = SaddleProblem::new(t.a.clone(), t.dc.clone(), t.m_v.clone(), DenseMatrix::from_diag(&[2.0]), t.f.clone(), vec![3.0])
            .unwrap();
        assert!(close(&riesz_q(&p).unwrap(), &[1.5], 1e-15));
        assert_eq!(riesz_q(&t.with_loads(t.f.clone(), vec![0.0]).unwrap()).unwrap(), vec![0.0]);
    }

    #[test]
    fn projection_examples() {
        let a = DenseMatrix::identity(1);
        let p = project_structure_preserving(
            &a,
            &a,
            &DenseMatrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap(),
            &DenseMatrix::identity(2),
            &DenseMatrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap(),
        )
        .unwrap();
        assert_eq!(p.dc, DenseMatrix::from_rows(&[vec![0.0]]).unwrap());
        let p = project_structure_preserving(
            &a,
            &a,
            &DenseMatrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap(),
            &DenseMatrix::identity(2),
            &DenseMatrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap(),
        )
        .unwrap();
        assert_eq!(p.dc, DenseMatrix::from_rows(&[vec![1.0]]).unwrap());
        let full = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let d = DenseMatrix::from_rows(&[vec![1.0], vec![3.0]]).unwrap();
        let p = project_structure_preserving(&a, &a, &d, &DenseMatrix::identity(2), &full).unwrap();
        assert!(close(p.dc.as_slice(), &[0.5, 3.0], 1e-15));
        let dep = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        assert!(matches!(
            project_structure_preserving(&a, &a, &d, &DenseMatrix::identity(2), &dep),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn empty_pressure_space() {
        let p = SaddleProblem::new(
            DenseMatrix::from_diag(&[2.0, 4.0]),
            DenseMatrix::zeros(0, 2),
            DenseMatrix::identity(2),
            DenseMatrix::zeros(0, 0),
            vec![2.0, 8.0],
            vec![],
        )
        .unwrap();
        validate(&p).unwrap();
        let s = kkt_solve(&p, 0.0).unwrap();
        assert_eq!(s.u, vec![1.0, 2.0]);
        assert!(s.p().unwrap().is_empty());
        let g = to_div_gram(&p).unwrap();
        assert_eq!(g.k, DenseMatrix::zeros(2, 2));
    }
}
