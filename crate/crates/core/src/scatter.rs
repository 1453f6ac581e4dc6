//! Scatter matrices and the equivalence oracle tying the factorization
//! residual `‖WᵀX − FGᵀ‖²_F` to the within-class scatter `Tr(Wᵀ·Sw·W)`.

use crate::error::{Error, Result};
use crate::matrix::{center_columns, spd_inverse, Matrix};

/// Hard class assignments; every class in `[0, c)` must be non-empty so the
/// indicator Gram matrix stays invertible.
#[derive(Debug, Clone)]
pub struct HardIndicator {
    assignments: Vec<usize>,
    classes: usize,
}

impl HardIndicator {
    pub fn new(assignments: Vec<usize>, classes: usize) -> Result<Self> {
        if classes == 0 || assignments.is_empty() {
            return Err(Error::InvalidParam {
                name: "assignments",
                detail: "need at least one sample and one class".into(),
            });
        }
        let mut counts = vec![0usize; classes];
        for &a in &assignments {
            if a >= classes {
                return Err(Error::InvalidParam {
                    name: "assignments",
                    detail: format!("label {a} out of range [0, {classes})"),
                });
            }
            counts[a] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::EmptyClass { class: empty });
        }
        Ok(HardIndicator {
            assignments,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.assignments
    }

    /// n×c 0/1 indicator matrix.
    pub fn indicator_matrix(&self) -> Matrix {
        let mut g = Matrix::zeros(self.len(), self.classes);
        for (i, &a) in self.assignments.iter().enumerate() {
            g[(i, a)] = 1.0;
        }
        g
    }
}

/// Total, between-class and within-class scatter of the samples in the
/// columns of `X`: `St = XHXᵀ`, `Sb = XHG(GᵀG)⁻¹GᵀHXᵀ`, `Sw = St − Sb`.
pub fn scatter_matrices(x: &Matrix, labels: &HardIndicator) -> Result<(Matrix, Matrix, Matrix)> {
    if labels.len() != x.cols() {
        return Err(Error::DimensionMismatch {
            op: "scatter_matrices",
            detail: format!("{} samples vs {} labels", x.cols(), labels.len()),
        });
    }
    let xc = center_columns(x);
    let st = xc.mul(&xc.transpose());

    let g = labels.indicator_matrix();
    let gram = g.transpose().mul(&g);
    let gram_inv = spd_inverse(&gram, "indicator Gram matrix GᵀG")?;
    // XH·G (GᵀG)⁻¹ Gᵀ·HXᵀ, built left to right.
    let xg = xc.mul(&g);
    let sb = xg.mul(&gram_inv).mul(&xg.transpose());
    let sw = st.sub(&sb);
    Ok((st, sb, sw))
}

/// Closed-form optimal centers `F = WᵀXG(GᵀG)⁻¹`, minimizing
/// `‖WᵀX − FGᵀ‖²_F` over `F`. `G` may be any matrix with invertible Gram.
pub fn optimal_center(w: &Matrix, x: &Matrix, g: &Matrix) -> Result<Matrix> {
    if w.rows() != x.rows() || g.rows() != x.cols() {
        return Err(Error::DimensionMismatch {
            op: "optimal_center",
            detail: format!(
                "W {}x{}, X {}x{}, G {}x{}",
                w.rows(),
                w.cols(),
                x.rows(),
                x.cols(),
                g.rows(),
                g.cols()
            ),
        });
    }
    let gram_inv = spd_inverse(&g.transpose().mul(g), "indicator Gram matrix GᵀG")?;
    Ok(w.transpose().mul(x).mul(g).mul(&gram_inv))
}

/// Absolute gap `|‖WᵀX − F*Gᵀ‖²_F − Tr(Wᵀ·Sw·W)|` with `F*` the optimal
/// center. For centered `X` and orthonormal `W` the two sides agree up to
/// rounding; the gap is the executable form of that equivalence.
pub fn factorization_scatter_gap(w: &Matrix, x: &Matrix, labels: &HardIndicator) -> Result<f64> {
    let g = labels.indicator_matrix();
    let f = optimal_center(w, x, &g)?;
    let residual = w.transpose().mul(x).sub(&f.mul(&g.transpose()));
    let lhs = residual.frob_norm().powi(2);

    let (_, _, sw) = scatter_matrices(x, labels)?;
    let rhs = w.transpose().mul(&sw).mul(w).trace();
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::random_orthonormal;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(rows, cols, |_, _| r.gen_range(-1.0..1.0))
    }

    #[test]
    fn indicator_rejects_empty_class_and_bad_label() {
        assert!(matches!(
            HardIndicator::new(vec![0, 0, 0], 2),
            Err(Error::EmptyClass { class: 1 })
        ));
        assert!(HardIndicator::new(vec![0, 2], 2).is_err());
    }

    #[test]
    fn singleton_classes_have_zero_within_scatter() {
        let x = Matrix::from_rows(&[vec![-1.0, 1.0]]);
        let labels = HardIndicator::new(vec![0, 1], 2).unwrap();
        let (st, sb, sw) = scatter_matrices(&x, &labels).unwrap();
        assert!(sw.frob_norm() <= 1e-12);
        assert!(st.sub(&sb).frob_norm() <= 1e-12);
    }

    #[test]
    fn single_class_means_zero_between_scatter() {
        let x = random_matrix(3, 6, 5);
        let labels = HardIndicator::new(vec![0; 6], 1).unwrap();
        let (st, sb, sw) = scatter_matrices(&x, &labels).unwrap();
        assert!(sb.frob_norm() <= 1e-10);
        assert!(st.sub(&sw).frob_norm() <= 1e-10);
    }

    #[test]
    fn within_scatter_matches_per_class_loop_oracle() {
        let x = random_matrix(4, 12, 9);
        let raw: Vec<usize> = (0..12).map(|i| i % 3).collect();
        let labels = HardIndicator::new(raw.clone(), 3).unwrap();
        let (st, sb, sw) = scatter_matrices(&x, &labels).unwrap();

        // Per-class loop on the centered data.
        let xc = crate::matrix::center_columns(&x);
        let mut expected = Matrix::zeros(4, 4);
        for class in 0..3 {
            let members: Vec<usize> = (0..12).filter(|&i| raw[i] == class).collect();
            let mut mean = [0.0; 4];
            for &i in &members {
                for d in 0..4 {
                    mean[d] += xc[(d, i)] / members.len() as f64;
                }
            }
            for &i in &members {
                for a in 0..4 {
                    for b in 0..4 {
                        expected[(a, b)] += (xc[(a, i)] - mean[a]) * (xc[(b, i)] - mean[b]);
                    }
                }
            }
        }
        assert!(sw.sub(&expected).frob_norm() <= 1e-9);
        // St = Sb + Sw and symmetry/PSD sanity.
        assert!(st.sub(&sb.add(&sw)).frob_norm() <= 1e-9 * st.frob_norm());
        for m in [&st, &sb, &sw] {
            assert!(m.asymmetry() <= 1e-10);
            let eig = crate::matrix::sym_eig(m).unwrap();
            assert!(*eig.eigenvalues.last().unwrap() >= -1e-8 * m.frob_norm().max(1.0));
        }
    }

    #[test]
    fn optimal_center_is_class_mean_for_one_class() {
        let x = Matrix::from_rows(&[vec![1.0, 3.0]]);
        let g = Matrix::from_rows(&[vec![1.0], vec![1.0]]);
        let f = optimal_center(&Matrix::identity(1), &x, &g).unwrap();
        assert!((f[(0, 0)] - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn optimal_center_reduces_to_projection_for_orthonormal_g() {
        let x = random_matrix(5, 8, 21);
        let w = random_orthonormal(5, 2, 3).unwrap();
        let g = random_orthonormal(8, 3, 4).unwrap();
        let f = optimal_center(&w, &x, &g).unwrap();
        let direct = w.transpose().mul(&x).mul(&g);
        assert!(f.sub(&direct).frob_norm() <= 1e-10);
    }

    #[test]
    fn optimal_center_survives_random_perturbations() {
        let x = random_matrix(4, 10, 33);
        let w = random_orthonormal(4, 2, 5).unwrap();
        let raw: Vec<usize> = (0..10).map(|i| i % 2).collect();
        let g = HardIndicator::new(raw, 2).unwrap().indicator_matrix();
        let f = optimal_center(&w, &x, &g).unwrap();
        let objective = |f: &Matrix| {
            let r = w.transpose().mul(&x).sub(&f.mul(&g.transpose()));
            l21_sq(&r)
        };
        let base = objective(&f);
        let mut r = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let delta = Matrix::from_fn(2, 2, |_, _| r.gen_range(-1.0..1.0)).scale(1e-3);
            assert!(objective(&f.add(&delta)) >= base - 1e-12);
        }
    }

    fn l21_sq(m: &Matrix) -> f64 {
        // Frobenius norm squared written as an explicit double loop.
        let mut s = 0.0;
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                s += m[(i, j)] * m[(i, j)];
            }
        }
        s
    }

    #[test]
    fn factorization_scatter_gap_vanishes_for_singleton_classes() {
        let x = crate::matrix::center_columns(&random_matrix(3, 4, 41));
        let w = random_orthonormal(3, 2, 6).unwrap();
        let labels = HardIndicator::new(vec![0, 1, 2, 3], 4).unwrap();
        let gap = factorization_scatter_gap(&w, &x, &labels).unwrap();
        assert!(gap <= 1e-10);
    }

    #[test]
    fn factorization_scatter_gap_small_on_random_instances() {
        let x = crate::matrix::center_columns(&random_matrix(8, 30, 43));
        let w = random_orthonormal(8, 3, 7).unwrap();
        let raw: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let labels = HardIndicator::new(raw, 3).unwrap();
        let (_, _, sw) = scatter_matrices(&x, &labels).unwrap();
        let scale = w.transpose().mul(&sw).mul(&w).trace().max(1.0);
        assert!(factorization_scatter_gap(&w, &x, &labels).unwrap() <= 1e-8 * scale);
    }

    #[test]
    fn factorization_scatter_gap_with_axis_projection() {
        let x = crate::matrix::center_columns(&random_matrix(6, 15, 47));
        let w = Matrix::from_fn(6, 2, |i, j| if i == j { 1.0 } else { 0.0 });
        let raw: Vec<usize> = (0..15).map(|i| i % 3).collect();
        let labels = HardIndicator::new(raw, 3).unwrap();
        let (_, _, sw) = scatter_matrices(&x, &labels).unwrap();
        let scale = w.transpose().mul(&sw).mul(&w).trace().max(1.0);
        assert!(factorization_scatter_gap(&w, &x, &labels).unwrap() <= 1e-8 * scale);
    }
}
