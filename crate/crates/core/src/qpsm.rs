//! Quadratic problem on the Stiefel manifold,
//! `max_{VᵀV=I} Tr(Vᵀ A V) + 2·Tr(Vᵀ B)`, solved by generalized power
//! iteration: repeat `M ← 2AV + 2B`, `V ← polar(M)`. For PSD `A` each step
//! is an ascent, so the objective trace is monotone.
//!
//! Both the indicator update and the projection update reduce to this form
//! after shifting their quadratic term to be positive semidefinite.

use crate::error::{Error, Result};
use crate::matrix::{polar_orthonormalize, sym_eig, Matrix};

/// Default cap on inner iterations.
pub const GPI_MAX_ITERS: usize = 200;
/// Default absolute objective-gain stopping threshold.
pub const GPI_TOL: f64 = 1e-10;

/// One instance of the Stiefel-manifold quadratic problem. `quadratic` must
/// already be PSD-shifted; `initial` supplies the warm start.
#[derive(Debug, Clone)]
pub struct QpsmProblem {
    /// p×p symmetric PSD matrix `A`.
    pub quadratic: Matrix,
    /// p×q linear coefficient `B` (objective contributes `2·Tr(VᵀB)`).
    pub linear: Matrix,
    /// p×q orthonormal starting point.
    pub initial: Matrix,
    pub max_iters: usize,
    pub tol: f64,
}

impl QpsmProblem {
    pub fn new(quadratic: Matrix, linear: Matrix, initial: Matrix) -> Self {
        QpsmProblem {
            quadratic,
            linear,
            initial,
            max_iters: GPI_MAX_ITERS,
            tol: GPI_TOL,
        }
    }

    fn validate(&self) -> Result<()> {
        let p = self.quadratic.rows();
        if self.quadratic.cols() != p {
            return Err(Error::NotSquare {
                rows: p,
                cols: self.quadratic.cols(),
            });
        }
        if self.linear.rows() != p || self.initial.rows() != p {
            return Err(Error::DimensionMismatch {
                op: "gpi_solve",
                detail: format!(
                    "A is {p}x{p}, B is {}x{}, V0 is {}x{}",
                    self.linear.rows(),
                    self.linear.cols(),
                    self.initial.rows(),
                    self.initial.cols()
                ),
            });
        }
        let q = self.initial.cols();
        if self.linear.cols() != q || q > p {
            return Err(Error::DimensionMismatch {
                op: "gpi_solve",
                detail: format!("B has {} columns, V0 has {q}", self.linear.cols()),
            });
        }
        Ok(())
    }
}

/// Solver output: the orthonormal maximizer, the per-iteration objective
/// trace (initial point included) and diagnostics.
#[derive(Debug, Clone)]
pub struct GpiSolution {
    pub v: Matrix,
    pub ascent_trace: Vec<f64>,
    /// Worst column-orthonormality residual seen across iterations.
    pub max_ortho_residual: f64,
    /// Set when any polar step hit a rank-deficient intermediate.
    pub rank_fallback: bool,
}

/// Shifts a symmetric matrix to PSD: `Ã = σ_max·I − A` with `σ_max` the
/// largest eigenvalue of `A`. Under `VᵀV = I` the shift changes the
/// objective by a constant, so argmax sets are unchanged.
pub fn shift_to_psd(a: &Matrix) -> Result<(Matrix, f64)> {
    let eig = sym_eig(a)?;
    let sigma_max = eig.eigenvalues[0];
    let n = a.rows();
    let mut shifted = a.scale(-1.0);
    for i in 0..n {
        shifted[(i, i)] += sigma_max;
    }
    Ok((shifted, sigma_max))
}

/// Generalized power iteration on a PSD-shifted problem.
pub fn gpi_solve(prob: &QpsmProblem) -> Result<GpiSolution> {
    prob.validate()?;
    // With M = 2AV + 2B the objective at V is ½⟨V, M⟩ + ⟨V, B⟩, so the
    // update direction doubles as the objective evaluation.
    let update = |v: &Matrix| prob.quadratic.mul(v).scale(2.0).add(&prob.linear.scale(2.0));
    let objective = |v: &Matrix, m: &Matrix| 0.5 * v.dot(m) + v.dot(&prob.linear);

    let mut v = prob.initial.clone();
    let mut m = update(&v);
    let mut rank_fallback = false;
    let mut max_ortho_residual = v.ortho_residual();
    let mut trace = vec![objective(&v, &m)];

    for _ in 0..prob.max_iters {
        let polar = polar_orthonormalize(&m)?;
        rank_fallback |= polar.rank_deficient;
        v = polar.u;
        max_ortho_residual = max_ortho_residual.max(v.ortho_residual());
        m = update(&v);
        let value = objective(&v, &m);
        let gain = value - trace.last().unwrap();
        trace.push(value);
        if gain <= prob.tol {
            break;
        }
    }
    if !v.is_finite() {
        return Err(Error::NonFinite { stage: "gpi_solve" });
    }
    Ok(GpiSolution {
        v,
        ascent_trace: trace,
        max_ortho_residual,
        rank_fallback,
    })
}
