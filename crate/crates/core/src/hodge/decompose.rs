use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::SimplicialComplex;
use crate::error::{Error, Result};
use crate::ipm::{ipm_solve, ipm_solve_with_riesz, IpmConfig};
use crate::linalg::{self, svd_right, sym_eig, DenseMatrix};
use crate::problem::DivGramForm;

/// Relative tolerance for numerically zero singular values and eigenvalues.
const SPECTRAL_REL_TOL: f64 = 1e-10;

/// Iteration counts of the solver calls behind one decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HodgeIterations {
    /// Riesz subsolve of the exact-part problem, when it ran.
    pub exact_subsolve: Option<usize>,
    pub exact_main: Option<usize>,
    pub coexact: Option<usize>,
}

impl HodgeIterations {
    /// Largest count over all partial iterations.
    pub fn max_partial(&self) -> usize {
        [self.exact_subsolve, self.exact_main, self.coexact].into_iter().flatten().max().unwrap_or(0)
    }
}

/// `u = dσ⊥ + h + u⊥` at level `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HodgeSplit {
    pub k: usize,
    pub u: Vec<f64>,
    /// `σ⊥`, a `(k−1)`-cochain (empty for `k = 0`).
    pub sigma: Vec<f64>,
    /// `dσ⊥`.
    pub exact: Vec<f64>,
    pub harmonic: Vec<f64>,
    pub coexact: Vec<f64>,
    pub iterations: HodgeIterations,
}

/// Pairwise `W^k` inner products of the three parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Orthogonality {
    pub harmonic_exact: f64,
    pub harmonic_coexact: f64,
    pub exact_coexact: f64,
}

impl Orthogonality {
    pub fn max_abs(&self) -> f64 {
        self.harmonic_exact.abs().max(self.harmonic_coexact.abs()).max(self.exact_coexact.abs())
    }
}

/// Reference split from explicit orthogonal projections.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectedSplit {
    pub exact: Vec<f64>,
    pub harmonic: Vec<f64>,
    pub coexact: Vec<f64>,
}

/// Form for the constraint `d: C^j → C^{j+1}` with `a = W^j` and
/// `M_V = W^j + dᵀW^{j+1}d`; `R = L_{j+1}ᵀ d` is attached as the K root.
fn stage_form(c: &SimplicialComplex, j: usize, gd: impl FnOnce(&DenseMatrix) -> Vec<f64>) -> Result<DivGramForm> {
    let d = c.coboundary(j);
    let r = c.weight_factor(j + 1).lower().transpose().matmul(d);
    let k = r.transpose().matmul(&r);
    let w = c.weight(j).clone();
    let m_v = w.add(&k);
    let n = w.rows();
    let gd = gd(&k);
    DivGramForm::new(w, m_v, k, vec![0.0; n], gd)?.with_k_root(r)
}

/// Splits the `k`-cochain `u` with two saddle point solves.
///
/// The exact part solves for `σ⊥ ⊥ ker d^{k−1}` with `dσ⊥` the projection of
/// `u` onto `im d^{k−1}`; that target is only known through `G(q) = (u, q)`,
/// so the full method with its Riesz subsolve runs. The coexact part is the
/// `W^k`-minimal cochain with the same coboundary as `u`; there the target
/// `d^k u` is known and `u` itself is passed as its preimage.
pub fn hodge_decompose(c: &SimplicialComplex, k: usize, u: &[f64], cfg: &IpmConfig) -> Result<HodgeSplit> {
    if k > c.top() {
        return Err(Error::InvalidConfig(format!("level {k} exceeds the top dimension {}", c.top())));
    }
    if u.len() != c.count(k) {
        return Err(Error::DimensionMismatch(format!("cochain has {} entries, level {k} has {}", u.len(), c.count(k))));
    }
    let mut iterations = HodgeIterations { exact_subsolve: None, exact_main: None, coexact: None };
    let (sigma, exact) = if k > 0 && c.count(k - 1) > 0 {
        let wu = c.weight(k).matvec(u);
        let form = stage_form(c, k - 1, |_| c.coboundary(k - 1).tr_matvec(&wu))?;
        let sol = ipm_solve(&form, cfg)?;
        sol.ensure_converged()?;
        iterations.exact_subsolve = sol.subsolve.as_ref().map(|t| t.records.len());
        iterations.exact_main = Some(sol.iterations());
        let exact = c.coboundary(k - 1).matvec(&sol.u);
        (sol.u, exact)
    } else {
        (vec![0.0; if k > 0 { c.count(k - 1) } else { 0 }], vec![0.0; u.len()])
    };
    let coexact = if k < c.top() && c.count(k + 1) > 0 {
        let form = stage_form(c, k, |kk| kk.matvec(u))?;
        let sol = ipm_solve_with_riesz(&form, cfg, u)?;
        sol.ensure_converged()?;
        iterations.coexact = Some(sol.iterations());
        sol.u
    } else {
        vec![0.0; u.len()]
    };
    let harmonic = (0..u.len()).map(|i| u[i] - exact[i] - coexact[i]).collect();
    Ok(HodgeSplit { k, u: u.to_vec(), sigma, exact, harmonic, coexact, iterations })
}

pub fn orthogonality_report(split: &HodgeSplit, w: &DenseMatrix) -> Orthogonality {
    Orthogonality {
        harmonic_exact: w.bilinear(&split.harmonic, &split.exact),
        harmonic_coexact: w.bilinear(&split.harmonic, &split.coexact),
        exact_coexact: w.bilinear(&split.exact, &split.coexact),
    }
}

/// Orthonormal vectors spanning the row space of `m`.
fn row_space(m: &DenseMatrix) -> Vec<Vec<f64>> {
    if m.rows() == 0 || m.cols() == 0 {
        return Vec::new();
    }
    let (s, v) = svd_right(m);
    let smax = s.last().copied().unwrap_or(0.0);
    (0..s.len()).filter(|&j| s[j] > SPECTRAL_REL_TOL * smax).map(|j| v.column(j)).collect()
}

fn project(basis: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for b in basis {
        linalg::axpy(linalg::dot(b, x), b, &mut out);
    }
    out
}

/// Brute-force split: `W^k`-orthogonal projections onto `im d^{k−1}` and onto
/// the complement of `ker d^k`, from full singular bases.
pub fn projection_oracle(c: &SimplicialComplex, k: usize, u: &[f64]) -> Result<ProjectedSplit> {
    if k > c.top() || u.len() != c.count(k) {
        return Err(Error::DimensionMismatch(format!("no level {k} cochain of length {}", u.len())));
    }
    let lk = c.weight_factor(k);
    let ut = lk.lower().tr_matvec(u);
    let exact_basis = if k > 0 { row_space(&c.whitened_coboundary(k - 1).transpose()) } else { Vec::new() };
    let coexact_basis = if k < c.top() { row_space(&c.whitened_coboundary(k)) } else { Vec::new() };
    let exact = lk.solve_upper(&project(&exact_basis, &ut));
    let coexact = lk.solve_upper(&project(&coexact_basis, &ut));
    let harmonic = (0..u.len()).map(|i| u[i] - exact[i] - coexact[i]).collect();
    Ok(ProjectedSplit { exact, harmonic, coexact })
}

/// Dimension of the kernel of the weighted Hodge Laplacian at level `k`.
pub fn harmonic_dim(c: &SimplicialComplex, k: usize) -> usize {
    let n = c.count(k);
    let mut lap = DenseMatrix::zeros(n, n);
    if k < c.top() {
        let d = c.whitened_coboundary(k);
        lap = lap.add(&d.transpose().matmul(&d));
    }
    if k > 0 {
        let d = c.whitened_coboundary(k - 1);
        lap = lap.add(&d.matmul(&d.transpose()));
    }
    let (vals, _) = sym_eig(&lap);
    let top = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    vals.iter().filter(|v| v.abs() <= SPECTRAL_REL_TOL * top).count()
}

/// Seeded cochain with entries uniform in `[−0.5, 0.5]`.
pub fn random_cochain(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-0.5..=0.5)).collect()
}
