//! The core method: objective evaluation and the alternating updates of the
//! projection `W`, centers `F`, relaxed indicator `G` and similarity graph
//! `S`, with convergence tracking.
//!
//! One outer sweep refreshes the residual weights, solves `F` in closed
//! form, moves `G` by a warm-started GPI step on the shifted indicator
//! subproblem, rebuilds `S` from the new indicator rows and finally moves
//! `W` by the non-greedy ratio step (reweighting plus a GPI solve). The
//! objective is recorded after every full sweep.

use crate::error::{Error, Result};
use crate::graph::{
    connected_components, entropy_term, laplacian, pairwise_sq_dists, select_bandwidths,
    similarity_closed_form, smoothness, Bandwidths, SimilarityMatrix,
};
use crate::matrix::{
    center_columns, l21_norm, polar_orthonormalize, random_orthonormal, spd_inverse, sym_eig,
    Axis, Matrix,
};
use crate::qpsm::{gpi_solve, shift_to_psd, QpsmProblem};

/// Edge strength below which a similarity is treated as absent when
/// counting graph components for the diagnostic report.
pub const COMPONENT_EDGE_THRESHOLD: f64 = 1e-4;

/// Ascent slack tolerated by the monotone-descent diagnostics.
pub const DESCENT_SLACK: f64 = 1e-9;

/// Optimization hyperparameters.
#[derive(Debug, Clone)]
pub struct Hyperparams {
    /// Graph-smoothness weight λ.
    pub lambda: f64,
    /// Entropy-regularizer weight β.
    pub beta: f64,
    /// Target dimension m of the projection.
    pub target_dim: usize,
    /// Number of clusters c.
    pub clusters: usize,
    /// Neighborhood size for the per-sample bandwidths.
    pub knn: usize,
    pub max_outer_iters: usize,
    /// Relative objective-change stopping threshold.
    pub eps_converge: f64,
    /// Floor applied to every norm denominator.
    pub eps_guard: f64,
    pub seed: u64,
}

impl Hyperparams {
    pub fn new(target_dim: usize, clusters: usize) -> Self {
        Hyperparams {
            lambda: 0.1,
            beta: 0.1,
            target_dim,
            clusters,
            knn: 5,
            max_outer_iters: 100,
            eps_converge: 1e-5,
            eps_guard: 1e-8,
            seed: 0,
        }
    }

    fn validate(&self, d: usize, n: usize) -> Result<()> {
        let bad = |name: &'static str, detail: String| Err(Error::InvalidParam { name, detail });
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad("lambda", format!("{} must be finite and >= 0", self.lambda));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return bad("beta", format!("{} must be finite and >= 0", self.beta));
        }
        if self.target_dim == 0 || self.target_dim > d {
            return bad("target_dim", format!("{} outside [1, {d}]", self.target_dim));
        }
        if self.clusters < 2 || self.clusters > n {
            return bad("clusters", format!("{} outside [2, {n}]", self.clusters));
        }
        if self.knn == 0 || self.knn + 1 > n {
            return bad("knn", format!("{} outside [1, {}]", self.knn, n - 1));
        }
        if self.max_outer_iters == 0 {
            return bad("max_outer_iters", "must be at least 1".into());
        }
        if self.eps_converge.is_nan() || self.eps_converge <= 0.0 {
            return bad("eps_converge", "must be positive".into());
        }
        if self.eps_guard.is_nan() || self.eps_guard <= 0.0 {
            return bad("eps_guard", "must be positive".into());
        }
        Ok(())
    }
}

/// The four optimization variables plus the derived per-sample weights and
/// bandwidths.
#[derive(Debug, Clone)]
pub struct ModelState {
    /// d×m projection with orthonormal columns.
    pub w: Matrix,
    /// m×c cluster centers in the projected space.
    pub f: Matrix,
    /// n×c relaxed indicator with orthonormal columns.
    pub g: Matrix,
    pub s: SimilarityMatrix,
    /// Diagonal residual weights d_ii.
    pub residual_weights: Vec<f64>,
    pub gamma: Bandwidths,
    /// Set once the bandwidths have been selected in indicator space; they
    /// are then held fixed so the entropy weights in the objective stay
    /// comparable across sweeps.
    pub bandwidths_locked: bool,
}

impl ModelState {
    /// Checks the state invariants; used by tests and diagnostics.
    pub fn check(&self) -> Result<()> {
        if self.w.ortho_residual() > 1e-8 || self.g.ortho_residual() > 1e-8 {
            return Err(Error::InvalidParam {
                name: "state",
                detail: "W or G drifted off the Stiefel manifold".into(),
            });
        }
        if self.residual_weights.iter().any(|&d| d.is_nan() || d <= 0.0) {
            return Err(Error::InvalidParam {
                name: "state",
                detail: "residual weights must stay positive".into(),
            });
        }
        Ok(())
    }
}

/// One recorded outer sweep.
#[derive(Debug, Clone)]
pub struct TraceEntry {
    pub iteration: usize,
    pub objective: f64,
    /// `|J_prev − J| / max(|J_prev|, eps_guard)`.
    pub relative_delta: f64,
    /// `‖WᵀW − I‖_F` after the sweep.
    pub ortho_w: f64,
    /// `‖GᵀG − I‖_F` after the sweep.
    pub ortho_g: f64,
}

/// Outcome of a full optimization run.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: ModelState,
    pub labels: Vec<usize>,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
    /// Connected components of the learned graph at the diagnostic
    /// threshold; informational only.
    pub components_found: usize,
    pub iterations_used: usize,
}

/// Evaluates
/// `J = ‖WᵀX − FGᵀ‖₂,₁ / ‖XᵀW‖₂,₁ + λ·Tr(Gᵀ L_S G) + β·Σᵢγᵢ Σⱼ(s·ln s − s)`,
/// with both l2,1 norms taken per sample.
pub fn objective(state: &ModelState, x: &Matrix, hp: &Hyperparams) -> Result<f64> {
    let projected = state.w.transpose().mul(x);
    let residual = projected.sub(&state.f.mul(&state.g.transpose()));
    let numerator = l21_norm(&residual, Axis::Columns);
    let denominator = l21_norm(&x.transpose().mul(&state.w), Axis::Rows);
    if denominator <= hp.eps_guard {
        return Err(Error::DegenerateProjection {
            detail: format!(
                "projected data carries no energy: l21(XᵀW) = {denominator:e} <= {:e}",
                hp.eps_guard
            ),
        });
    }
    let l = laplacian(&state.s);
    let smooth = smoothness(&state.g, &l)?;
    let entropy = entropy_term(&state.s, &state.gamma);
    Ok(numerator / denominator + hp.lambda * smooth + hp.beta * entropy)
}

/// Residual weights `d_ii = 1 / (2·max(‖(WᵀX − FGᵀ)_i‖₂, eps_guard))`.
pub fn residual_weights(state: &ModelState, x: &Matrix, eps_guard: f64) -> Vec<f64> {
    let residual = state
        .w
        .transpose()
        .mul(x)
        .sub(&state.f.mul(&state.g.transpose()));
    (0..x.cols())
        .map(|i| 1.0 / (2.0 * residual.col_norm(i).max(eps_guard)))
        .collect()
}

/// Closed-form center update `F = WᵀXDG(GᵀDG)⁻¹`, the minimizer of the
/// weighted residual trace over `F`.
pub fn update_f(state: &ModelState, x: &Matrix) -> Result<Matrix> {
    let weighted_g = state.g.scale_rows(&state.residual_weights);
    let gram = state.g.transpose().mul(&weighted_g);
    let gram_inv = spd_inverse(&gram, "weighted indicator Gram matrix GᵀDG")?;
    Ok(state.w.transpose().mul(x).mul(&weighted_g).mul(&gram_inv))
}

/// Indicator update: a majorize-minimize step on the weighted subproblem
/// `min Tr(GᵀDG·FᵀF) − 2·Tr(GᵀD·XᵀWF) + ‖XᵀW‖₂,₁·λ·Tr(Gᵀ L_S G)` over the
/// Stiefel manifold, solved by one warm-started GPI call.
///
/// The graph weight carries the objective's ratio denominator `‖XᵀW‖₂,₁`:
/// the residual quadratic stands in for the ratio's numerator, so the
/// smoothness term must be scaled up by the denominator to keep the two in
/// the proportion the objective prescribes.
///
/// The two-sided quadratic is bounded at the current iterate by
/// `σ_max(FᵀF)·Tr(ΔᵀDΔ)`, which turns the subproblem into the GPI form
/// `max Tr(Gᵀ(σ·I − λ_eff·L_S − σ_max(FᵀF)·D)G) + 2·Tr(GᵀB)` with
/// `B = D(XᵀWF + G⁰(σ_max(FᵀF)·I − FᵀF))`. The majorizer touches at the
/// incoming `G`, so the subproblem value never increases. A fully
/// degenerate subproblem (both terms zero) leaves `G` unchanged.
pub fn update_g(state: &ModelState, x: &Matrix, hp: &Hyperparams) -> Result<Matrix> {
    let c = state.g.cols();
    let ftf = state.f.transpose().mul(&state.f);
    let sigma_f = sym_eig(&ftf)?.eigenvalues[0].max(0.0);
    let denominator = l21_norm(&x.transpose().mul(&state.w), Axis::Rows);

    let mut quad = laplacian(&state.s).scale(hp.lambda * denominator);
    for i in 0..quad.rows() {
        quad[(i, i)] += sigma_f * state.residual_weights[i];
    }
    // Any shift at or above the top eigenvalue keeps the subproblem
    // equivalent (the constant is fixed on the Stiefel manifold) and the
    // shifted quadratic PSD; the Gershgorin bound avoids an n×n
    // eigendecomposition per sweep.
    let bound = gershgorin_upper(&quad);
    let mut shifted = quad.scale(-1.0);
    for i in 0..shifted.rows() {
        shifted[(i, i)] += bound;
    }

    let attraction = x.transpose().mul(&state.w).mul(&state.f);
    let relaxation = state
        .g
        .mul(&Matrix::identity(c).scale(sigma_f).sub(&ftf));
    let linear = attraction.add(&relaxation).scale_rows(&state.residual_weights);
    if shifted.frob_norm() == 0.0 && linear.frob_norm() == 0.0 {
        log::warn!("indicator subproblem is degenerate (zero quadratic and linear terms); G kept");
        return Ok(state.g.clone());
    }
    let sol = gpi_solve(&QpsmProblem::new(shifted, linear, state.g.clone()))?;
    if sol.rank_fallback {
        log::warn!("indicator GPI hit a rank-deficient polar step");
    }
    Ok(sol.v)
}

/// Similarity update: squared distances between indicator rows, then the
/// per-entry closed form.
///
/// The objective's similarity block
/// `λ/2·Σ d²s + β·Σ γᵢ(s·ln s − s)` separates per entry and is exactly
/// minimized by `s_ij = exp(−λ·d_ij²/(2β·γ_i))`, so this step never
/// increases the objective. Bandwidths are selected on the first
/// indicator-space call and reused afterwards (`bandwidths_locked`); a
/// refreshed γ would rescale the entropy weights and make objective values
/// incomparable across sweeps.
pub fn update_s(state: &ModelState, hp: &Hyperparams) -> Result<(SimilarityMatrix, Bandwidths)> {
    let d2 = pairwise_sq_dists(&state.g);
    let gamma = if state.bandwidths_locked {
        state.gamma.clone()
    } else {
        select_bandwidths(&d2, hp.knn)?
    };
    let s = if hp.lambda <= 0.0 {
        // Without a smoothness weight the entropy block alone is minimized
        // by the all-ones similarity.
        SimilarityMatrix::new(Matrix::from_fn(d2.rows(), d2.cols(), |_, _| 1.0))?
    } else {
        let factor = (2.0 * hp.beta / hp.lambda).max(f64::MIN_POSITIVE);
        let effective =
            Bandwidths::new(gamma.values().iter().map(|g| g * factor).collect())?;
        similarity_closed_form(&d2, &effective)?
    };
    Ok((s, gamma))
}

/// Projection update by the non-greedy ratio step. Returns the new `W`
/// together with the ratio `ξ = ‖Wᵀ(X−U)‖₂,₁ / ‖XᵀW‖₂,₁` evaluated at the
/// incoming `W`; over repeated calls ξ is non-increasing.
pub fn update_w(state: &ModelState, x: &Matrix, hp: &Hyperparams) -> Result<(Matrix, f64)> {
    if x.frob_norm() == 0.0 {
        return Err(Error::InvalidParam {
            name: "x",
            detail: "all-zero data matrix".into(),
        });
    }
    let weighted_g = state.g.scale_rows(&state.residual_weights);
    let gram = state.g.transpose().mul(&weighted_g);
    let gram_inv = spd_inverse(&gram, "weighted indicator Gram matrix GᵀDG")?;
    // U = XDG(GᵀDG)⁻¹Gᵀ; its columns are the fitted per-sample centers.
    let u = x.mul(&weighted_g).mul(&gram_inv).mul(&state.g.transpose());
    let diff = x.sub(&u);

    let projected_diff = state.w.transpose().mul(&diff);
    let projected_x = state.w.transpose().mul(x);
    let n = x.cols();
    let numerator: f64 = (0..n).map(|i| projected_diff.col_norm(i)).sum();
    let denominator: f64 = (0..n).map(|i| projected_x.col_norm(i)).sum();
    let xi = numerator / denominator.max(hp.eps_guard);

    let p: Vec<f64> = (0..n)
        .map(|i| 1.0 / (2.0 * projected_diff.col_norm(i).max(hp.eps_guard)))
        .collect();
    // Rows of `mu` are the unit-normalized projections; rows stay exactly
    // zero where the projection vanishes.
    let mut mu = Matrix::zeros(n, state.w.cols());
    for i in 0..n {
        let norm = projected_x.col_norm(i);
        if norm != 0.0 {
            for k in 0..state.w.cols() {
                mu[(i, k)] = projected_x[(k, i)] / norm;
            }
        }
    }

    let a = diff.scale_cols(&p).mul(&diff.transpose());
    let shifted = if x.rows() <= x.cols() {
        shift_to_psd(&a)?.0
    } else {
        // A has rank <= n, so its exact top eigenvalue lives in the n×n
        // Gram of diff·P^{1/2}; avoids a d×d eigendecomposition.
        let sqrt_p: Vec<f64> = p.iter().map(|v| v.sqrt()).collect();
        let half = diff.scale_cols(&sqrt_p);
        let gram = half.transpose().mul(&half);
        let sigma_max = sym_eig(&gram)?.eigenvalues[0].max(0.0);
        let mut shifted = a.scale(-1.0);
        for i in 0..shifted.rows() {
            shifted[(i, i)] += sigma_max;
        }
        shifted
    };
    let linear = x.mul(&mu).scale(xi * 0.5);
    let sol = gpi_solve(&QpsmProblem::new(shifted, linear, state.w.clone()))?;
    if sol.rank_fallback {
        log::warn!("projection GPI hit a rank-deficient polar step");
    }
    Ok((sol.v, xi))
}

/// Rotates the relaxed indicator toward the closest 0/1 indicator
/// structure before labels are read off.
///
/// The objective is invariant under `G → GR, F → FR` for any orthogonal
/// c×c `R` (the factorization product, the trace smoothness, the row
/// distances and the constraint are all unchanged), so the converged `G`
/// carries an arbitrary rotation. The alternating Procrustes scheme below
/// fixes that gauge: discretize row-wise, re-solve the rotation against the
/// discretization, repeat. Fully deterministic.
pub fn align_indicator(g: &Matrix) -> Matrix {
    let (n, c) = (g.rows(), g.cols());
    if c == 1 {
        return g.clone();
    }
    // Work on row-normalized directions.
    let mut gn = g.clone();
    for i in 0..n {
        let norm = gn.row_norm(i);
        if norm > 0.0 {
            for j in 0..c {
                gn[(i, j)] /= norm;
            }
        }
    }

    // Farthest-first prototype rows seed the rotation; the first one is the
    // largest original row so the selection follows the samples under
    // permutation.
    let mut prototypes = vec![0usize; c];
    let mut accum = vec![0.0f64; n];
    let first = (0..n)
        .max_by(|&a, &b| g.row_norm(a).partial_cmp(&g.row_norm(b)).unwrap())
        .unwrap_or(0);
    prototypes[0] = first;
    for k in 1..c {
        for i in 0..n {
            let dot: f64 = (0..c)
                .map(|j| gn[(i, j)] * gn[(prototypes[k - 1], j)])
                .sum();
            accum[i] += dot.abs();
        }
        let mut best = 0;
        let mut best_val = f64::INFINITY;
        for (i, &a) in accum.iter().enumerate() {
            if a < best_val {
                best_val = a;
                best = i;
            }
        }
        prototypes[k] = best;
    }
    let mut rotation = Matrix::from_fn(c, c, |i, j| gn[(prototypes[j], i)]);
    if let Ok(polar) = polar_orthonormalize(&rotation) {
        rotation = polar.u;
    }

    // Alternate between the best one-hot fit per row (signed argmax) and
    // the Procrustes-optimal rotation toward it.
    let signed_argmax = |aligned: &Matrix| -> Vec<usize> {
        (0..n)
            .map(|i| {
                let mut best = 0;
                for j in 1..c {
                    if aligned[(i, j)] > aligned[(i, best)] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    };
    let mut labels = vec![usize::MAX; n];
    for _ in 0..30 {
        let aligned = gn.mul(&rotation);
        let next = signed_argmax(&aligned);
        if next == labels {
            break;
        }
        labels = next;
        let mut target = Matrix::zeros(c, c);
        for (i, &label) in labels.iter().enumerate() {
            for j in 0..c {
                target[(j, label)] += gn[(i, j)];
            }
        }
        match polar_orthonormalize(&target) {
            Ok(polar) if !polar.rank_deficient => rotation = polar.u,
            _ => break,
        }
    }
    g.mul(&rotation)
}

/// Hard labels from the relaxed indicator: per-row maximum-magnitude entry
/// (column sign flips cannot change it), ties broken toward the lowest
/// index.
pub fn labels_from_indicator(g: &Matrix) -> Vec<usize> {
    (0..g.rows())
        .map(|i| {
            let mut best = 0;
            let mut best_mag = g[(i, 0)].abs();
            for j in 1..g.cols() {
                let mag = g[(i, j)].abs();
                if mag > best_mag {
                    best = j;
                    best_mag = mag;
                }
            }
            best
        })
        .collect()
}

/// Gershgorin upper bound on the largest eigenvalue of a symmetric matrix.
fn gershgorin_upper(a: &Matrix) -> f64 {
    let mut bound = 0.0f64;
    for i in 0..a.rows() {
        let mut radius = 0.0;
        for j in 0..a.cols() {
            if i != j {
                radius += a[(i, j)].abs();
            }
        }
        bound = bound.max(a[(i, i)] + radius);
    }
    bound.max(0.0)
}

fn split_mix(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn ensure_finite(m: &Matrix, stage: &'static str) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { stage })
    }
}

/// Seeded initial state on the centered data: random orthonormal `W` and
/// `G`, unit-residual weights `d_ii = 1/2`, `F` from its closed form, and
/// `S` from data-space distances.
pub fn initial_state(centered: &Matrix, hp: &Hyperparams) -> Result<ModelState> {
    let (d, n) = (centered.rows(), centered.cols());
    let w = random_orthonormal(d, hp.target_dim, split_mix(hp.seed, 1))?;
    let g = random_orthonormal(n, hp.clusters, split_mix(hp.seed, 2))?;

    let d2 = pairwise_sq_dists(&centered.transpose());
    let gamma = select_bandwidths(&d2, hp.knn)?;
    let s = similarity_closed_form(&d2, &gamma)?;

    let mut state = ModelState {
        w,
        f: Matrix::zeros(hp.target_dim, hp.clusters),
        g,
        s,
        residual_weights: vec![0.5; n],
        gamma,
        bandwidths_locked: false,
    };
    state.f = update_f(&state, centered)?;
    Ok(state)
}

/// Runs the full alternating optimization.
///
/// The data is column-centered internally. Each sweep refreshes `D`, then
/// updates `F`, `G`, `S` and `W` in order and records the objective; the
/// loop stops once the relative objective change drops below
/// `eps_converge` or the iteration cap is hit.
pub fn fit(x: &Matrix, hp: &Hyperparams) -> Result<FitResult> {
    hp.validate(x.rows(), x.cols())?;
    if !x.is_finite() {
        return Err(Error::InvalidParam {
            name: "x",
            detail: "data matrix contains non-finite entries".into(),
        });
    }
    let centered = center_columns(x);
    if centered.frob_norm() <= hp.eps_guard * x.frob_norm().max(1.0) {
        return Err(Error::DegenerateProjection {
            detail: "all samples are identical after centering".into(),
        });
    }
    let state = initial_state(&centered, hp)?;
    fit_from_state(&centered, hp, state)
}

/// Runs the sweep loop from an explicit starting state on already-centered
/// data. Exposed so callers can control initialization.
pub fn fit_from_state(
    centered: &Matrix,
    hp: &Hyperparams,
    mut state: ModelState,
) -> Result<FitResult> {
    hp.validate(centered.rows(), centered.cols())?;
    let mut previous = objective(&state, centered, hp)?;
    if !previous.is_finite() {
        return Err(Error::NonFinite { stage: "objective" });
    }

    let mut trace = Vec::new();
    let mut converged = false;
    for iteration in 1..=hp.max_outer_iters {
        state.residual_weights = residual_weights(&state, centered, hp.eps_guard);

        state.f = update_f(&state, centered)?;
        ensure_finite(&state.f, "update_F")?;

        state.g = update_g(&state, centered, hp)?;
        ensure_finite(&state.g, "update_G")?;

        let (s, gamma) = update_s(&state, hp)?;
        ensure_finite(s.as_matrix(), "update_S")?;
        state.s = s;
        state.gamma = gamma;
        state.bandwidths_locked = true;

        let (w, _xi) = update_w(&state, centered, hp)?;
        ensure_finite(&w, "update_W")?;
        state.w = w;

        // The W subproblem eliminates F through its closed form; carry that
        // substitution into the state so the recorded objective is the
        // quantity the update actually decreased.
        state.f = update_f(&state, centered)?;
        ensure_finite(&state.f, "update_F")?;

        let value = objective(&state, centered, hp)?;
        if !value.is_finite() {
            return Err(Error::NonFinite { stage: "objective" });
        }
        // The pre-loop baseline carries data-space bandwidths, so only
        // sweep-to-sweep pairs are comparable.
        if iteration > 1 && value > previous + DESCENT_SLACK {
            log::warn!("objective rose from {previous:.12e} to {value:.12e} at sweep {iteration}");
        }
        let relative_delta = (previous - value).abs() / previous.abs().max(hp.eps_guard);
        trace.push(TraceEntry {
            iteration,
            objective: value,
            relative_delta,
            ortho_w: state.w.ortho_residual(),
            ortho_g: state.g.ortho_residual(),
        });
        previous = value;
        if relative_delta <= hp.eps_converge {
            converged = true;
            break;
        }
    }

    let labels = labels_from_indicator(&align_indicator(&state.g));
    let components_found = connected_components(&state.s, COMPONENT_EDGE_THRESHOLD);
    let iterations_used = trace.len();
    Ok(FitResult {
        model: state,
        labels,
        trace,
        converged,
        components_found,
        iterations_used,
    })
}
