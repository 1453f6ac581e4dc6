//! Similarity-graph learning: pairwise distances, per-sample bandwidths,
//! the closed-form similarity update `s_ij = exp(−d_ij²/γ_i)`, Laplacian
//! construction, the entropy regularizer and connectivity diagnostics.
//!
//! Each similarity depends only on its own pairwise distance, so outliers
//! cannot steal probability mass from genuine neighbors the way a
//! row-normalized graph would let them.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Bandwidth floor guarding against duplicate points.
pub const GAMMA_FLOOR: f64 = 1e-12;

/// n×n matrix of similarity probabilities, entries in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix(Matrix);

impl SimilarityMatrix {
    pub fn new(s: Matrix) -> Result<Self> {
        if s.rows() != s.cols() {
            return Err(Error::NotSquare {
                rows: s.rows(),
                cols: s.cols(),
            });
        }
        for v in s.data() {
            if !v.is_finite() || *v < 0.0 || *v > 1.0 {
                return Err(Error::InvalidParam {
                    name: "similarity",
                    detail: format!("entry {v} outside [0, 1]"),
                });
            }
        }
        Ok(SimilarityMatrix(s))
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }
}

/// Per-sample positive bandwidths γ_i.
#[derive(Debug, Clone)]
pub struct Bandwidths(Vec<f64>);

impl Bandwidths {
    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        if gamma.iter().any(|g| !g.is_finite() || *g <= 0.0) {
            return Err(Error::InvalidParam {
                name: "gamma",
                detail: "bandwidths must be positive and finite".into(),
            });
        }
        Ok(Bandwidths(gamma))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Squared Euclidean distances between the rows of `points`; symmetric with
/// a zero diagonal.
pub fn pairwise_sq_dists(points: &Matrix) -> Matrix {
    let n = points.rows();
    let mut d2 = Matrix::zeros(n.max(1), n.max(1));
    for i in 0..n {
        for j in (i + 1)..n {
            let mut acc = 0.0;
            for k in 0..points.cols() {
                let diff = points[(i, k)] - points[(j, k)];
                acc += diff * diff;
            }
            d2[(i, j)] = acc;
            d2[(j, i)] = acc;
        }
    }
    d2
}

/// γ_i = mean of the `knn` smallest off-diagonal entries of row i of the
/// squared-distance matrix, floored at [`GAMMA_FLOOR`].
pub fn select_bandwidths(d2: &Matrix, knn: usize) -> Result<Bandwidths> {
    let n = d2.rows();
    if n < 2 {
        return Err(Error::InvalidParam {
            name: "d2",
            detail: "need at least two points to pick bandwidths".into(),
        });
    }
    if knn == 0 || knn > n - 1 {
        return Err(Error::InvalidParam {
            name: "knn",
            detail: format!("knn={knn} outside [1, {}]", n - 1),
        });
    }
    let mut gamma = Vec::with_capacity(n);
    for i in 0..n {
        let mut off: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| d2[(i, j)]).collect();
        off.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mean = off[..knn].iter().sum::<f64>() / knn as f64;
        gamma.push(mean.max(GAMMA_FLOOR));
    }
    Bandwidths::new(gamma)
}

/// Closed-form similarity `s_ij = exp(−d_ij²/γ_i)`, the minimizer of the
/// per-entry surrogate `d²·s + γ·(s·ln s − s)` on `(0, 1]`.
pub fn similarity_closed_form(d2: &Matrix, gamma: &Bandwidths) -> Result<SimilarityMatrix> {
    let n = d2.rows();
    if gamma.len() != n {
        return Err(Error::DimensionMismatch {
            op: "similarity_closed_form",
            detail: format!("{n} points vs {} bandwidths", gamma.len()),
        });
    }
    let mut s = Matrix::zeros(n, n);
    for i in 0..n {
        let g = gamma.values()[i];
        for j in 0..n {
            s[(i, j)] = (-d2[(i, j)] / g).exp();
        }
    }
    SimilarityMatrix::new(s)
}

/// Graph Laplacian `L = D_S − (S + Sᵀ)/2` with degrees
/// `(D_S)_ii = Σ_j (s_ij + s_ji)/2`. Symmetric, zero row sums, PSD. The
/// diagonal of `S` cancels between degree and adjacency, so `L` is
/// invariant to it.
pub fn laplacian(s: &SimilarityMatrix) -> Matrix {
    let n = s.n();
    let sm = s.as_matrix();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        let mut degree = 0.0;
        for j in 0..n {
            let w = 0.5 * (sm[(i, j)] + sm[(j, i)]);
            l[(i, j)] = -w;
            degree += w;
        }
        l[(i, i)] += degree;
    }
    l
}

/// `Σ_i γ_i Σ_j (s_ij·ln s_ij − s_ij)` with the convention `0·ln 0 = 0`.
pub fn entropy_term(s: &SimilarityMatrix, gamma: &Bandwidths) -> f64 {
    let n = s.n();
    let sm = s.as_matrix();
    let mut total = 0.0;
    for i in 0..n {
        let mut inner = 0.0;
        for j in 0..n {
            let v = sm[(i, j)];
            if v > 0.0 {
                inner += v * v.ln() - v;
            }
        }
        total += gamma.values()[i] * inner;
    }
    total
}

/// Smoothness penalty `Tr(Gᵀ L G)`; equals half the similarity-weighted sum
/// of squared row differences of `G`.
pub fn smoothness(g: &Matrix, l: &Matrix) -> Result<f64> {
    if l.rows() != l.cols() || g.rows() != l.rows() {
        return Err(Error::DimensionMismatch {
            op: "smoothness",
            detail: format!("G {}x{} vs L {}x{}", g.rows(), g.cols(), l.rows(), l.cols()),
        });
    }
    Ok(g.transpose().mul(l).mul(g).trace())
}

/// Number of connected components of the undirected graph with an edge
/// between i and j iff `(s_ij + s_ji)/2 > threshold`.
pub fn connected_components(s: &SimilarityMatrix, threshold: f64) -> usize {
    let n = s.n();
    let sm = s.as_matrix();
    let mut seen = vec![false; n];
    let mut components = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if !seen[j] && i != j && 0.5 * (sm[(i, j)] + sm[(j, i)]) > threshold {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    components
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::sym_eig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(rows, cols, |_, _| r.gen_range(-1.0..1.0))
    }

    fn random_similarity(n: usize, seed: u64) -> SimilarityMatrix {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        SimilarityMatrix::new(Matrix::from_fn(n, n, |_, _| r.gen_range(0.0..1.0))).unwrap()
    }

    #[test]
    fn pairwise_dists_examples() {
        let same = Matrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]]);
        assert_eq!(pairwise_sq_dists(&same).frob_norm(), 0.0);

        let line = Matrix::from_rows(&[vec![0.0], vec![3.0]]);
        let d2 = pairwise_sq_dists(&line);
        assert_eq!(d2[(0, 1)], 9.0);
        assert_eq!(d2[(1, 0)], 9.0);
        assert_eq!(d2[(0, 0)], 0.0);
    }

    #[test]
    fn pairwise_dists_match_loop_oracle() {
        let pts = random_matrix(10, 3, 3);
        let d2 = pairwise_sq_dists(&pts);
        for i in 0..10 {
            for j in 0..10 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += (pts[(i, k)] - pts[(j, k)]).powi(2);
                }
                assert!((d2[(i, j)] - acc).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn bandwidths_floor_and_nearest_neighbor() {
        let dup = Matrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]);
        let g = select_bandwidths(&pairwise_sq_dists(&dup), 1).unwrap();
        assert!(g.values().iter().all(|&v| v == GAMMA_FLOOR));

        let pts = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![10.0]]);
        let g = select_bandwidths(&pairwise_sq_dists(&pts), 1).unwrap();
        assert_eq!(g.values()[0], 1.0);
    }

    #[test]
    fn bandwidths_match_sorting_oracle() {
        let pts = random_matrix(8, 2, 7);
        let d2 = pairwise_sq_dists(&pts);
        let knn = 3;
        let g = select_bandwidths(&d2, knn).unwrap();
        for i in 0..8 {
            let mut off: Vec<f64> = (0..8).filter(|&j| j != i).map(|j| d2[(i, j)]).collect();
            off.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let expect = (off[..knn].iter().sum::<f64>() / knn as f64).max(GAMMA_FLOOR);
            assert_eq!(g.values()[i], expect);
        }
        assert!(select_bandwidths(&d2, 0).is_err());
        assert!(select_bandwidths(&d2, 8).is_err());
    }

    #[test]
    fn similarity_analytic_values() {
        let d2 = Matrix::from_rows(&[vec![0.0, 2.0], vec![2.0, 0.0]]);
        let gamma = Bandwidths::new(vec![2.0, 2.0]).unwrap();
        let s = similarity_closed_form(&d2, &gamma).unwrap();
        assert_eq!(s.as_matrix()[(0, 0)], 1.0);
        assert!((s.as_matrix()[(0, 1)] - (-1.0f64).exp()).abs() <= 1e-12);
    }

    #[test]
    fn similarity_minimizes_per_entry_surrogate_on_grid() {
        // s = exp(-d²/γ) must beat every grid point of d²·s + γ(s·ln s − s).
        let mut r = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let d2: f64 = r.gen_range(0.0..5.0);
            let gamma: f64 = r.gen_range(0.1..3.0);
            let closed = (-d2 / gamma).exp();
            let f = |s: f64| d2 * s + gamma * (s * s.ln() - s);
            let f_closed = f(closed.max(f64::MIN_POSITIVE));
            let mut best = f64::INFINITY;
            for k in 1..=100_000 {
                let s = k as f64 / 100_000.0;
                best = best.min(f(s));
            }
            assert!(f_closed <= best + 1e-5);
        }
    }

    #[test]
    fn similarity_symmetric_for_shared_bandwidth() {
        let pts = random_matrix(6, 2, 13);
        let d2 = pairwise_sq_dists(&pts);
        let gamma = Bandwidths::new(vec![0.7; 6]).unwrap();
        let s = similarity_closed_form(&d2, &gamma).unwrap();
        assert!(s.as_matrix().asymmetry() <= 1e-15);
    }

    #[test]
    fn laplacian_examples() {
        let zero = SimilarityMatrix::new(Matrix::zeros(3, 3)).unwrap();
        assert_eq!(laplacian(&zero).frob_norm(), 0.0);

        let mut s = Matrix::zeros(2, 2);
        s[(0, 1)] = 1.0;
        s[(1, 0)] = 1.0;
        let l = laplacian(&SimilarityMatrix::new(s).unwrap());
        assert_eq!(l[(0, 0)], 1.0);
        assert_eq!(l[(0, 1)], -1.0);
        assert_eq!(l[(1, 0)], -1.0);
        assert_eq!(l[(1, 1)], 1.0);
    }

    #[test]
    fn laplacian_is_psd_with_zero_row_sums() {
        let s = random_similarity(7, 17);
        let l = laplacian(&s);
        assert!(l.asymmetry() <= 1e-14);
        for i in 0..7 {
            let sum: f64 = l.row(i).iter().sum();
            assert!(sum.abs() <= 1e-10);
        }
        let eig = sym_eig(&l).unwrap();
        assert!(*eig.eigenvalues.last().unwrap() >= -1e-9);
    }

    #[test]
    fn laplacian_ignores_similarity_diagonal() {
        let s = random_similarity(5, 19);
        let mut with_diag = s.as_matrix().clone();
        for i in 0..5 {
            with_diag[(i, i)] = 1.0;
        }
        let mut without_diag = s.as_matrix().clone();
        for i in 0..5 {
            without_diag[(i, i)] = 0.0;
        }
        let a = laplacian(&SimilarityMatrix::new(with_diag).unwrap());
        let b = laplacian(&SimilarityMatrix::new(without_diag).unwrap());
        assert!(a.sub(&b).frob_norm() <= 1e-14);
    }

    #[test]
    fn laplacian_quadratic_form_matches_pairwise_sum() {
        let s = random_similarity(6, 23);
        let l = laplacian(&s);
        let mut r = ChaCha8Rng::seed_from_u64(29);
        let sm = s.as_matrix();
        for _ in 0..20 {
            let x: Vec<f64> = (0..6).map(|_| r.gen_range(-2.0..2.0)).collect();
            let xm = Matrix::from_fn(6, 1, |i, _| x[i]);
            let quad = xm.transpose().mul(&l).mul(&xm)[(0, 0)];
            let mut pair = 0.0;
            for i in 0..6 {
                for j in (i + 1)..6 {
                    let w = 0.5 * (sm[(i, j)] + sm[(j, i)]);
                    pair += w * (x[i] - x[j]).powi(2);
                }
            }
            assert!((quad - pair).abs() <= 1e-9);
            assert!(quad >= -1e-9);
        }
    }

    #[test]
    fn entropy_examples_and_oracle() {
        let ones = SimilarityMatrix::new(Matrix::from_fn(3, 3, |_, _| 1.0)).unwrap();
        let gamma = Bandwidths::new(vec![1.0; 3]).unwrap();
        assert!((entropy_term(&ones, &gamma) - (-9.0)).abs() <= 1e-12);

        let zeros = SimilarityMatrix::new(Matrix::zeros(3, 3)).unwrap();
        assert_eq!(entropy_term(&zeros, &gamma), 0.0);

        let s = random_similarity(4, 31);
        let gamma = Bandwidths::new(vec![0.3, 1.1, 2.0, 0.5]).unwrap();
        let mut expected = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let v = s.as_matrix()[(i, j)];
                if v > 0.0 {
                    expected += gamma.values()[i] * (v * v.ln() - v);
                }
            }
        }
        assert!((entropy_term(&s, &gamma) - expected).abs() <= 1e-12);
    }

    #[test]
    fn smoothness_zero_cases_and_cross_check() {
        let s = random_similarity(5, 37);
        let l = laplacian(&s);
        let constant = Matrix::from_fn(5, 2, |_, j| (j + 1) as f64);
        assert!(smoothness(&constant, &l).unwrap().abs() <= 1e-9);

        let zero_l = laplacian(&SimilarityMatrix::new(Matrix::zeros(5, 5)).unwrap());
        let g = random_matrix(5, 2, 39);
        assert_eq!(smoothness(&g, &zero_l).unwrap(), 0.0);

        // Trace form vs pairwise-sum form.
        let trace_form = smoothness(&g, &l).unwrap();
        let sm = s.as_matrix();
        let mut pair = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                let w = 0.5 * (sm[(i, j)] + sm[(j, i)]);
                let mut d2 = 0.0;
                for k in 0..2 {
                    d2 += (g[(i, k)] - g[(j, k)]).powi(2);
                }
                pair += 0.5 * w * d2;
            }
        }
        assert!((trace_form - pair).abs() <= 1e-9);
        assert!(smoothness(&random_matrix(4, 2, 40), &l).is_err());
    }

    #[test]
    fn connected_components_examples() {
        let mut block = Matrix::zeros(4, 4);
        block[(0, 1)] = 0.9;
        block[(1, 0)] = 0.9;
        block[(2, 3)] = 0.8;
        block[(3, 2)] = 0.8;
        let s = SimilarityMatrix::new(block).unwrap();
        assert_eq!(connected_components(&s, 0.0), 2);

        let full = SimilarityMatrix::new(Matrix::from_fn(4, 4, |_, _| 1.0)).unwrap();
        assert_eq!(connected_components(&full, 0.0), 1);
    }

    #[test]
    fn connected_components_matches_union_find_oracle() {
        let mut r = ChaCha8Rng::seed_from_u64(101);
        for trial in 0..20 {
            let n = 8;
            let raw = Matrix::from_fn(n, n, |i, j| {
                if i == j {
                    0.0
                } else if r.gen_bool(0.2) {
                    1.0
                } else {
                    0.0
                }
            });
            let s = SimilarityMatrix::new(raw).unwrap();
            // union-find oracle
            let mut parent: Vec<usize> = (0..n).collect();
            fn find(parent: &mut Vec<usize>, i: usize) -> usize {
                if parent[i] != i {
                    let root = find(parent, parent[i]);
                    parent[i] = root;
                }
                parent[i]
            }
            let sm = s.as_matrix();
            for i in 0..n {
                for j in 0..n {
                    if i != j && 0.5 * (sm[(i, j)] + sm[(j, i)]) > 0.0 {
                        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                        parent[a] = b;
                    }
                }
            }
            let mut roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
            roots.sort_unstable();
            roots.dedup();
            assert_eq!(connected_components(&s, 0.0), roots.len(), "trial {trial}");
        }
    }
}
