//! Simplicial cochain complexes, Betti numbers and the Hodge decomposition
//! computed with the basis-free iterated penalty method.

mod decompose;
mod io;

pub use decompose::{
    harmonic_dim, hodge_decompose, orthogonality_report, projection_oracle, random_cochain, HodgeIterations,
    HodgeSplit, Orthogonality, ProjectedSplit,
};
pub use io::{complex_to_string, parse_complex, read_complex, write_complex, write_split_csv};

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{factor_spd, rank, DenseMatrix, SpdFactorization};

/// Relative tolerance for ranks of coboundaries.
pub const BETTI_REL_TOL: f64 = 1e-10;

/// Oriented simplices per dimension with their coboundaries and weights.
///
/// The orientation of a simplex is the order in which its vertices are
/// listed. `coboundary(k)` maps `k`-cochains to `(k+1)`-cochains.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialComplex {
    simplices: Vec<Vec<Vec<usize>>>,
    coboundaries: Vec<DenseMatrix>,
    weights: Vec<DenseMatrix>,
    factors: Vec<SpdFactorization>,
}

impl SimplicialComplex {
    /// Highest simplex dimension.
    pub fn top(&self) -> usize {
        self.simplices.len() - 1
    }

    pub fn simplices(&self, k: usize) -> &[Vec<usize>] {
        &self.simplices[k]
    }

    /// Number of `k`-simplices.
    pub fn count(&self, k: usize) -> usize {
        self.simplices[k].len()
    }

    pub fn coboundary(&self, k: usize) -> &DenseMatrix {
        &self.coboundaries[k]
    }

    pub fn weight(&self, k: usize) -> &DenseMatrix {
        &self.weights[k]
    }

    pub(crate) fn weight_factor(&self, k: usize) -> &SpdFactorization {
        &self.factors[k]
    }

    /// Replaces the cochain inner products; each must be SPD of matching size.
    pub fn with_weights(&self, weights: Vec<DenseMatrix>) -> Result<Self> {
        let factors = check_weights(&self.simplices, &weights)?;
        Ok(SimplicialComplex { weights, factors, ..self.clone() })
    }

    /// `(x, y)_{W^k}`.
    pub fn inner(&self, k: usize, x: &[f64], y: &[f64]) -> f64 {
        self.weights[k].bilinear(x, y)
    }

    /// `L_{k+1}ᵀ d^k L_k⁻ᵀ`: the coboundary in coordinates where both weights are identities.
    pub(crate) fn whitened_coboundary(&self, k: usize) -> DenseMatrix {
        let d = &self.coboundaries[k];
        let lk = &self.factors[k];
        // (L_k⁻¹ dᵀ)ᵀ = d L_k⁻ᵀ
        let cols: Vec<Vec<f64>> = d.transpose().columns().iter().map(|c| lk.solve_lower(c)).collect();
        let d_w = DenseMatrix::from_columns(self.count(k), &cols).transpose();
        self.factors[k + 1].lower().transpose().matmul(&d_w)
    }
}

fn check_weights(simplices: &[Vec<Vec<usize>>], weights: &[DenseMatrix]) -> Result<Vec<SpdFactorization>> {
    if weights.len() != simplices.len() {
        return Err(Error::InvalidComplex(format!(
            "{} weight matrices for {} dimensions",
            weights.len(),
            simplices.len()
        )));
    }
    weights
        .iter()
        .zip(simplices)
        .enumerate()
        .map(|(k, (w, s))| {
            if (w.rows(), w.cols()) != (s.len(), s.len()) {
                return Err(Error::InvalidComplex(format!(
                    "weight {k} is {}x{}, expected {}x{}",
                    w.rows(),
                    w.cols(),
                    s.len(),
                    s.len()
                )));
            }
            factor_spd(w).map_err(|e| Error::InvalidComplex(format!("weight {k}: {e}")))
        })
        .collect()
}

/// Sign of the permutation taking `from` to `to` (same vertex set).
fn permutation_sign(from: &[usize], to: &[usize]) -> f64 {
    let mut perm: Vec<usize> = to.iter().map(|v| from.iter().position(|w| w == v).unwrap()).collect();
    let mut sign = 1.0;
    for i in 0..perm.len() {
        while perm[i] != i {
            let j = perm[i];
            perm.swap(i, j);
            sign = -sign;
        }
    }
    sign
}

/// Builds the complex from simplex lists indexed by dimension.
///
/// Level 0 lists the vertices as one-element simplices. The coboundary entry
/// for a `(k+1)`-simplex `[v₀ … v_{k+1}]` and its facet without `v_i` is
/// `(−1)^i`, times the sign of the permutation between that face and the
/// facet's stored order. Weights default to identities.
pub fn build_complex(simplices: Vec<Vec<Vec<usize>>>) -> Result<SimplicialComplex> {
    build_complex_weighted(simplices, None)
}

pub fn build_complex_weighted(
    simplices: Vec<Vec<Vec<usize>>>,
    weights: Option<Vec<DenseMatrix>>,
) -> Result<SimplicialComplex> {
    if simplices.is_empty() {
        return Err(Error::InvalidComplex("no vertices".into()));
    }
    let mut index: Vec<HashMap<Vec<usize>, usize>> = Vec::with_capacity(simplices.len());
    for (k, level) in simplices.iter().enumerate() {
        let mut seen = HashMap::new();
        for (i, s) in level.iter().enumerate() {
            if s.len() != k + 1 {
                return Err(Error::InvalidComplex(format!("simplex {s:?} listed at dimension {k}")));
            }
            let key: Vec<usize> = s.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
            if key.len() != s.len() {
                return Err(Error::InvalidComplex(format!("simplex {s:?} repeats a vertex")));
            }
            if k > 0 {
                if let Some(v) = s.iter().find(|v| !index[0].contains_key(&vec![**v])) {
                    return Err(Error::InvalidComplex(format!("simplex {s:?} uses unknown vertex {v}")));
                }
            }
            if seen.insert(key, i).is_some() {
                return Err(Error::InvalidComplex(format!("simplex {s:?} listed twice")));
            }
        }
        index.push(seen);
    }
    let mut coboundaries = Vec::with_capacity(simplices.len().saturating_sub(1));
    for k in 0..simplices.len() - 1 {
        let mut d = DenseMatrix::zeros(simplices[k + 1].len(), simplices[k].len());
        for (r, s) in simplices[k + 1].iter().enumerate() {
            for i in 0..s.len() {
                let face: Vec<usize> = s.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v).collect();
                let mut key = face.clone();
                key.sort_unstable();
                let c = *index[k]
                    .get(&key)
                    .ok_or_else(|| Error::InvalidComplex(format!("facet {face:?} of simplex {s:?} is missing")))?;
                let alt = if i % 2 == 0 { 1.0 } else { -1.0 };
                d[(r, c)] = alt * permutation_sign(&simplices[k][c], &face);
            }
        }
        coboundaries.push(d);
    }
    for k in 1..coboundaries.len() {
        let dd = coboundaries[k].matmul(&coboundaries[k - 1]);
        if dd.max_abs() != 0.0 {
            return Err(Error::InvalidComplex(format!("d{k}·d{} is not zero", k - 1)));
        }
    }
    let weights = weights.unwrap_or_else(|| simplices.iter().map(|s| DenseMatrix::identity(s.len())).collect());
    let factors = check_weights(&simplices, &weights)?;
    Ok(SimplicialComplex { simplices, coboundaries, weights, factors })
}

/// `b_k = dim ker d^k − rank d^{k−1}` for every level.
pub fn betti(c: &SimplicialComplex) -> Vec<usize> {
    let ranks: Vec<usize> = c.coboundaries.iter().map(|d| rank_of(d)).collect();
    (0..=c.top())
        .map(|k| {
            let ker = c.count(k) - if k < c.top() { ranks[k] } else { 0 };
            ker - if k > 0 { ranks[k - 1] } else { 0 }
        })
        .collect()
}

fn rank_of(d: &DenseMatrix) -> usize {
    if d.rows() == 0 || d.cols() == 0 {
        0
    } else {
        rank(d, BETTI_REL_TOL)
    }
}

fn vertices(n: usize) -> Vec<Vec<usize>> {
    (0..n).map(|v| vec![v]).collect()
}

/// `v0 – v1 – … – v_{n−1}`.
pub fn path_graph(n: usize) -> SimplicialComplex {
    let edges = (1..n).map(|i| vec![i - 1, i]).collect();
    build_complex(vec![vertices(n), edges]).expect("path graph is a valid complex")
}

/// Edges `(0,1), (1,2), (2,0)` and no face.
pub fn hollow_triangle() -> SimplicialComplex {
    build_complex(vec![vertices(3), vec![vec![0, 1], vec![1, 2], vec![2, 0]]]).expect("valid complex")
}

/// The hollow triangle with the face `(0,1,2)`.
pub fn filled_triangle() -> SimplicialComplex {
    build_complex(vec![vertices(3), vec![vec![0, 1], vec![1, 2], vec![2, 0]], vec![vec![0, 1, 2]]])
        .expect("valid complex")
}

/// Triangulated annulus: inner triangle `0,1,2`, outer `3,4,5`, six faces.
pub fn annulus() -> SimplicialComplex {
    let edges = vec![
        vec![0, 1],
        vec![1, 2],
        vec![2, 0],
        vec![3, 4],
        vec![4, 5],
        vec![5, 3],
        vec![0, 3],
        vec![1, 3],
        vec![1, 4],
        vec![2, 4],
        vec![2, 5],
        vec![0, 5],
    ];
    let faces = vec![vec![0, 1, 3], vec![1, 3, 4], vec![1, 2, 4], vec![2, 4, 5], vec![2, 0, 5], vec![0, 5, 3]];
    build_complex(vec![vertices(6), edges, faces]).expect("valid complex")
}

/// Clique complex of a seeded random graph, up to triangles.
///
/// Each edge is present with probability `p`; vertex order inside each
/// simplex is shuffled so orientations are not all ascending.
pub fn random_flag_complex(n: usize, p: f64, seed: u64) -> SimplicialComplex {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj = vec![vec![false; n]; n];
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p.clamp(0.0, 1.0)) {
                adj[i][j] = true;
                adj[j][i] = true;
                edges.push(if rng.random_bool(0.5) { vec![i, j] } else { vec![j, i] });
            }
        }
    }
    let mut faces = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if adj[i][j] && adj[j][k] && adj[i][k] {
                    faces.push(match rng.random_range(0..3) {
                        0 => vec![i, j, k],
                        1 => vec![j, i, k],
                        _ => vec![k, j, i],
                    });
                }
            }
        }
    }
    build_complex(vec![vertices(n), edges, faces]).expect("clique complexes are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph_incidence() {
        let c = path_graph(3);
        assert_eq!(c.coboundary(0).to_rows(), vec![vec![-1.0, 1.0, 0.0], vec![0.0, -1.0, 1.0]]);
        assert_eq!(betti(&c), vec![1, 0]);
    }

    #[test]
    fn hollow_triangle_incidence_and_betti() {
        let c = hollow_triangle();
        assert_eq!(
            c.coboundary(0).to_rows(),
            vec![vec![-1.0, 1.0, 0.0], vec![0.0, -1.0, 1.0], vec![1.0, 0.0, -1.0]]
        );
        assert_eq!(betti(&c), vec![1, 1]);
    }

    #[test]
    fn filled_triangle_is_a_complex() {
        let c = filled_triangle();
        assert_eq!(c.coboundary(1).to_rows(), vec![vec![1.0, 1.0, 1.0]]);
        assert_eq!(c.coboundary(1).matmul(c.coboundary(0)).max_abs(), 0.0);
        assert_eq!(betti(&c), vec![1, 0, 0]);
    }

    #[test]
    fn annulus_betti() {
        let c = annulus();
        assert_eq!((c.count(0), c.count(1), c.count(2)), (6, 12, 6));
        assert_eq!(betti(&c), vec![1, 1, 0]);
    }

    #[test]
    fn orientation_follows_vertex_order() {
        let c = build_complex(vec![vertices(3), vec![vec![1, 0], vec![1, 2], vec![0, 2]], vec![vec![2, 1, 0]]])
            .unwrap();
        // ∂[2,1,0] = [1,0] − [2,0] + [2,1] = [1,0] + [0,2] − [1,2]
        assert_eq!(c.coboundary(1).to_rows(), vec![vec![1.0, -1.0, 1.0]]);
    }

    #[test]
    fn missing_facet_rejected() {
        let e = build_complex(vec![vertices(3), vec![vec![0, 1], vec![1, 2]], vec![vec![0, 1, 2]]]).unwrap_err();
        assert!(matches!(e, Error::InvalidComplex(ref m) if m.contains("[0, 2]")), "{e}");
    }

    #[test]
    fn malformed_simplices_rejected() {
        for bad in [
            vec![vertices(2), vec![vec![0, 0]]],
            vec![vertices(2), vec![vec![0, 1], vec![1, 0]]],
            vec![vertices(2), vec![vec![0, 1, 1]]],
            vec![vertices(2), vec![vec![0, 7]]],
        ] {
            assert!(matches!(build_complex(bad), Err(Error::InvalidComplex(_))));
        }
    }

    #[test]
    fn random_complexes_are_deterministic() {
        assert_eq!(random_flag_complex(7, 0.5, 3), random_flag_complex(7, 0.5, 3));
    }
}
