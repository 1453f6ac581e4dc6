//! Dense real-matrix primitives shared by every other module: norms,
//! centering, symmetric eigendecomposition, polar orthonormalization and
//! seeded random orthonormal matrices.
//!
//! Everything here is plain `f64` row-major storage. Problem sizes stay in
//! the low thousands, so no sparsity and no BLAS; the eigensolver is a
//! cyclic Jacobi sweep, which is unconditionally convergent on symmetric
//! matrices.

use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Which way the per-group norm of [`l21_norm`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Columns,
    Rows,
}

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from a slice of rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        assert!(!rows.is_empty() && !rows[0].is_empty());
        let cols = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        let mut m = Matrix::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            m.data[i * cols..(i + 1) * cols].copy_from_slice(row);
        }
        m
    }

    pub fn diag(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Matrix::zeros(self.rows, other.cols);
        // i-k-j order keeps the inner loop contiguous in row-major storage.
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                let src = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    /// Frobenius inner product `⟨self, other⟩ = Tr(selfᵀ · other)`.
    pub fn dot(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (d, s) in out.data.iter_mut().zip(&other.data) {
            *d += s;
        }
        out
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (d, s) in out.data.iter_mut().zip(&other.data) {
            *d -= s;
        }
        out
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        let mut out = self.clone();
        for d in out.data.iter_mut() {
            *d *= factor;
        }
        out
    }

    /// Right-multiplication by `diag(weights)`: scales column `j` by `weights[j]`.
    pub fn scale_cols(&self, weights: &[f64]) -> Matrix {
        assert_eq!(self.cols, weights.len());
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] *= weights[j];
            }
        }
        out
    }

    /// Left-multiplication by `diag(weights)`: scales row `i` by `weights[i]`.
    pub fn scale_rows(&self, weights: &[f64]) -> Matrix {
        assert_eq!(self.rows, weights.len());
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] *= weights[i];
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn col_norm(&self, j: usize) -> f64 {
        (0..self.rows)
            .map(|i| self[(i, j)] * self[(i, j)])
            .sum::<f64>()
            .sqrt()
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        self.row(i).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `‖selfᵀ·self − I‖_F`, the orthonormality residual of the columns.
    pub fn ortho_residual(&self) -> f64 {
        let gram = self.transpose().mul(self);
        gram.sub(&Matrix::identity(self.cols)).frob_norm()
    }

    /// Largest `|a_ij − a_ji|` over all pairs; zero for symmetric matrices.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols.min(self.rows) {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    fn ensure_square(&self) -> Result<()> {
        if self.rows != self.cols {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(())
    }

    fn ensure_symmetric(&self, tolerance: f64) -> Result<()> {
        self.ensure_square()?;
        let scale = self.frob_norm().max(1.0);
        let deviation = self.asymmetry();
        if deviation > tolerance * scale {
            return Err(Error::NotSymmetric {
                deviation,
                tolerance: tolerance * scale,
            });
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Sum of per-column (or per-row) Euclidean norms.
pub fn l21_norm(m: &Matrix, axis: Axis) -> f64 {
    match axis {
        Axis::Columns => (0..m.cols()).map(|j| m.col_norm(j)).sum(),
        Axis::Rows => (0..m.rows()).map(|i| m.row_norm(i)).sum(),
    }
}

/// Subtracts the mean column from every column, i.e. `X·H` with
/// `H = I − (1/n)·1·1ᵀ`. Output columns sum to the zero vector.
pub fn center_columns(x: &Matrix) -> Matrix {
    let n = x.cols() as f64;
    let mut out = x.clone();
    for i in 0..x.rows() {
        let mean = x.row(i).iter().sum::<f64>() / n;
        for j in 0..x.cols() {
            out[(i, j)] -= mean;
        }
    }
    out
}

/// Full spectral decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct EigResult {
    /// Eigenvalues sorted descending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, ordered to match `eigenvalues`.
    pub eigenvectors: Matrix,
}

const SYM_TOLERANCE: f64 = 1e-8;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Stops when the off-diagonal Frobenius norm drops below `1e-11·‖A‖_F`.
pub fn sym_eig(a: &Matrix) -> Result<EigResult> {
    a.ensure_symmetric(SYM_TOLERANCE)?;
    let n = a.rows();
    let mut w = a.clone();
    // Work on the exactly symmetrized copy so rotations stay consistent.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (w[(i, j)] + w[(j, i)]);
            w[(i, j)] = avg;
            w[(j, i)] = avg;
        }
    }
    let mut v = Matrix::identity(n);
    let stop = 1e-11 * w.frob_norm().max(f64::MIN_POSITIVE);

    let off = |m: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)] * m[(i, j)];
                }
            }
        }
        s.sqrt()
    };

    let mut converged = n <= 1 || off(&w) <= stop;
    let mut sweeps = 0;
    while !converged {
        sweeps += 1;
        if sweeps > JACOBI_MAX_SWEEPS {
            return Err(Error::EigNoConvergence { sweeps });
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = w[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let tau = (w[(q, q)] - w[(p, p)]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // A <- Jᵀ A J on rows/columns p and q.
                for k in 0..n {
                    let akp = w[(k, p)];
                    let akq = w[(k, q)];
                    w[(k, p)] = c * akp - s * akq;
                    w[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = w[(p, k)];
                    let aqk = w[(q, k)];
                    w[(p, k)] = c * apk - s * aqk;
                    w[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        converged = off(&w) <= stop;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(j, j)].partial_cmp(&w[(i, i)]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| w[(i, i)]).collect();
    let eigenvectors = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(EigResult {
        eigenvalues,
        eigenvectors,
    })
}

/// Orthonormal polar factor of a full-column-rank matrix.
#[derive(Debug, Clone)]
pub struct PolarFactor {
    /// Column-orthonormal matrix maximizing `Tr(Uᵀ M)`.
    pub u: Matrix,
    /// Set when `M` was rank-deficient and part of the basis had to be
    /// completed arbitrarily.
    pub rank_deficient: bool,
}

/// Computes the orthonormal polar factor of `M` (p×q, p ≥ q) from the
/// eigendecomposition of `MᵀM`. A rank-deficient input is completed to an
/// orthonormal basis and flagged.
pub fn polar_orthonormalize(m: &Matrix) -> Result<PolarFactor> {
    let (p, q) = (m.rows(), m.cols());
    if p < q {
        return Err(Error::DimensionMismatch {
            op: "polar_orthonormalize",
            detail: format!("need rows >= cols, got {p}x{q}"),
        });
    }
    let gram = m.transpose().mul(m);
    let eig = sym_eig(&gram)?;
    let sigma_max = eig.eigenvalues[0].max(0.0).sqrt();
    let rank_tol = sigma_max.max(1.0) * 1e-12;

    let mut u = Matrix::zeros(p, q);
    let mut deficient = Vec::new();
    for j in 0..q {
        let sigma = eig.eigenvalues[j].max(0.0).sqrt();
        if sigma > rank_tol {
            for i in 0..p {
                let mut acc = 0.0;
                for k in 0..q {
                    acc += m[(i, k)] * eig.eigenvectors[(k, j)];
                }
                u[(i, j)] = acc / sigma;
            }
        } else {
            deficient.push(j);
        }
    }
    let rank_deficient = !deficient.is_empty();
    if rank_deficient {
        complete_columns(&mut u, &deficient);
    }

    // U·Vᵀ is the polar factor; a couple of Newton-Schulz steps push the
    // orthonormality residual down to machine precision.
    let mut polar = u.mul(&eig.eigenvectors.transpose());
    for _ in 0..8 {
        if polar.ortho_residual() <= 1e-13 {
            break;
        }
        let gram = polar.transpose().mul(&polar);
        let correction = Matrix::identity(q).scale(3.0).sub(&gram);
        polar = polar.mul(&correction).scale(0.5);
    }
    Ok(PolarFactor {
        u: polar,
        rank_deficient,
    })
}

/// Gram-Schmidt fill-in for columns flagged as numerically zero.
fn complete_columns(u: &mut Matrix, missing: &[usize]) {
    let (p, q) = (u.rows(), u.cols());
    for &j in missing {
        let mut filled = false;
        for basis in 0..p {
            let mut cand = vec![0.0; p];
            cand[basis] = 1.0;
            for k in 0..q {
                if missing.contains(&k) && k >= j {
                    continue;
                }
                let dot: f64 = (0..p).map(|i| cand[i] * u[(i, k)]).sum();
                for i in 0..p {
                    cand[i] -= dot * u[(i, k)];
                }
            }
            let norm: f64 = cand.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-8 {
                for i in 0..p {
                    u[(i, j)] = cand[i] / norm;
                }
                filled = true;
                break;
            }
        }
        assert!(filled, "failed to complete orthonormal basis");
    }
}

/// Seeded random matrix with orthonormal columns; bitwise deterministic for
/// a fixed seed.
pub fn random_orthonormal(p: usize, q: usize, seed: u64) -> Result<Matrix> {
    if p < q {
        return Err(Error::DimensionMismatch {
            op: "random_orthonormal",
            detail: format!("need rows >= cols, got {p}x{q}"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    // A Gaussian p×q matrix is full rank almost surely; retry on the
    // measure-zero failure just in case.
    for bump in 0..4u64 {
        let raw = Matrix::from_fn(p, q, |_, _| normal.sample(&mut rng));
        let polar = polar_orthonormalize(&raw)?;
        if !polar.rank_deficient {
            return Ok(polar.u);
        }
        let _ = bump;
    }
    Err(Error::Singular {
        what: "random gaussian matrix",
    })
}

/// Inverse of a symmetric positive-definite matrix via its spectrum.
pub fn spd_inverse(a: &Matrix, what: &'static str) -> Result<Matrix> {
    let eig = sym_eig(a)?;
    let max = eig.eigenvalues[0];
    let min = *eig.eigenvalues.last().unwrap();
    if max <= 0.0 || min <= 1e-13 * max {
        return Err(Error::Singular { what });
    }
    let inv_vals: Vec<f64> = eig.eigenvalues.iter().map(|&l| 1.0 / l).collect();
    let v = &eig.eigenvectors;
    Ok(v.scale_cols(&inv_vals).mul(&v.transpose()))
}
