//! Reference methods for comparisons: Lloyd k-means with plus-plus seeding
//! and PCA projection.

use crate::error::{Error, Result};
use crate::matrix::{center_columns, sym_eig, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one k-means run (best restart).
#[derive(Debug, Clone)]
pub struct KmeansResult {
    /// c×dim matrix of centers, one per row.
    pub centers: Matrix,
    pub labels: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd iterations from k-means++ seeding; the best of `restarts` runs by
/// inertia. Deterministic for a fixed seed. Points are rows of `points`.
pub fn kmeans(
    points: &Matrix,
    c: usize,
    seed: u64,
    max_iters: usize,
    restarts: usize,
) -> Result<KmeansResult> {
    let n = points.rows();
    if c == 0 || c > n {
        return Err(Error::InvalidParam {
            name: "clusters",
            detail: format!("{c} outside [1, {n}]"),
        });
    }
    if max_iters == 0 || restarts == 0 {
        return Err(Error::InvalidParam {
            name: "max_iters/restarts",
            detail: "must be at least 1".into(),
        });
    }
    let mut best: Option<KmeansResult> = None;
    for restart in 0..restarts {
        let run_seed = seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(restart as u64);
        let run = kmeans_single(points, c, run_seed, max_iters)?;
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}

fn kmeans_single(points: &Matrix, c: usize, seed: u64, max_iters: usize) -> Result<KmeansResult> {
    let (n, dim) = (points.rows(), points.cols());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding.
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(c);
    centers.push(points.row(rng.gen_range(0..n)).to_vec());
    let mut nearest_d2: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), &centers[0])).collect();
    while centers.len() < c {
        let total: f64 = nearest_d2.iter().sum();
        let next = if total <= 0.0 {
            rng.gen_range(0..n)
        } else {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &d2) in nearest_d2.iter().enumerate() {
                if target < d2 {
                    chosen = i;
                    break;
                }
                target -= d2;
            }
            chosen
        };
        centers.push(points.row(next).to_vec());
        for i in 0..n {
            nearest_d2[i] = nearest_d2[i].min(sq_dist(points.row(i), centers.last().unwrap()));
        }
    }

    let mut labels = vec![0usize; n];
    let mut iterations = 0;
    for iter in 0..max_iters {
        iterations = iter + 1;
        // Assignment step; ties go to the lowest center index.
        let mut changed = false;
        for i in 0..n {
            let mut best_k = 0;
            let mut best_d = f64::INFINITY;
            for (k, center) in centers.iter().enumerate() {
                let d = sq_dist(points.row(i), center);
                if d < best_d {
                    best_d = d;
                    best_k = k;
                }
            }
            if labels[i] != best_k {
                labels[i] = best_k;
                changed = true;
            }
        }

        // Update step; an empty cluster is re-seeded to the farthest point.
        let mut sums = vec![vec![0.0; dim]; c];
        let mut counts = vec![0usize; c];
        for i in 0..n {
            counts[labels[i]] += 1;
            for (s, v) in sums[labels[i]].iter_mut().zip(points.row(i)) {
                *s += v;
            }
        }
        for k in 0..c {
            if counts[k] == 0 {
                let farthest = (0..n)
                    .max_by(|&a, &b| {
                        sq_dist(points.row(a), &centers[labels[a]])
                            .partial_cmp(&sq_dist(points.row(b), &centers[labels[b]]))
                            .unwrap()
                    })
                    .unwrap();
                log::warn!("k-means cluster {k} emptied; re-seeded to sample {farthest}");
                centers[k] = points.row(farthest).to_vec();
            } else {
                for (j, s) in sums[k].iter().enumerate() {
                    centers[k][j] = s / counts[k] as f64;
                }
            }
        }
        if !changed && iter > 0 {
            break;
        }
    }

    // Final assignment so labels are a fixed point of the centers.
    let mut inertia = 0.0;
    for i in 0..n {
        let mut best_k = 0;
        let mut best_d = f64::INFINITY;
        for (k, center) in centers.iter().enumerate() {
            let d = sq_dist(points.row(i), center);
            if d < best_d {
                best_d = d;
                best_k = k;
            }
        }
        labels[i] = best_k;
        inertia += best_d;
    }

    let centers = Matrix::from_rows(&centers);
    Ok(KmeansResult {
        centers,
        labels,
        inertia,
        iterations,
    })
}

/// PCA projection output.
#[derive(Debug, Clone)]
pub struct PcaResult {
    /// d×m matrix of the top principal directions.
    pub w: Matrix,
    /// m×n projected (centered) data.
    pub projected: Matrix,
    /// Per-component variances, non-increasing.
    pub explained_variance: Vec<f64>,
}

/// Top-`m` eigenvectors of the covariance of the column-centered data and
/// the projection onto them. Samples are columns of `x`. Uses the Gram
/// matrix route when d > n.
pub fn pca_project(x: &Matrix, m: usize) -> Result<PcaResult> {
    let (d, n) = (x.rows(), x.cols());
    if m == 0 || m > d.min(n) {
        return Err(Error::InvalidParam {
            name: "m",
            detail: format!("{m} outside [1, min({d}, {n})]"),
        });
    }
    let xc = center_columns(x);
    let mut w = Matrix::zeros(d, m);
    let mut explained = Vec::with_capacity(m);

    if d <= n {
        let cov = xc.mul(&xc.transpose()).scale(1.0 / n as f64);
        let eig = sym_eig(&cov)?;
        for j in 0..m {
            explained.push(eig.eigenvalues[j].max(0.0));
            for i in 0..d {
                w[(i, j)] = eig.eigenvectors[(i, j)];
            }
        }
    } else {
        // d > n: the covariance spectrum comes from the n×n Gram matrix,
        // with directions recovered as Xc·v/√θ.
        let gram = xc.transpose().mul(&xc);
        let eig = sym_eig(&gram)?;
        let scale_tol = eig.eigenvalues[0].max(0.0) * 1e-12;
        for j in 0..m {
            let theta = eig.eigenvalues[j].max(0.0);
            explained.push(theta / n as f64);
            if theta > scale_tol {
                let inv = 1.0 / theta.sqrt();
                for i in 0..d {
                    let mut acc = 0.0;
                    for k in 0..n {
                        acc += xc[(i, k)] * eig.eigenvectors[(k, j)];
                    }
                    w[(i, j)] = acc * inv;
                }
            }
            // Zero-variance directions are filled by the orthonormalization
            // pass below.
        }
    }

    orthonormalize_columns(&mut w);
    let projected = w.transpose().mul(&xc);
    Ok(PcaResult {
        w,
        projected,
        explained_variance: explained,
    })
}

/// Modified Gram-Schmidt in place; zero columns are completed from the
/// canonical basis.
fn orthonormalize_columns(w: &mut Matrix) {
    let (d, m) = (w.rows(), w.cols());
    for j in 0..m {
        for _pass in 0..2 {
            for k in 0..j {
                let dot: f64 = (0..d).map(|i| w[(i, j)] * w[(i, k)]).sum();
                for i in 0..d {
                    w[(i, j)] -= dot * w[(i, k)];
                }
            }
        }
        let mut norm: f64 = (0..d).map(|i| w[(i, j)] * w[(i, j)]).sum::<f64>().sqrt();
        if norm <= 1e-10 {
            // Complete with the first canonical vector independent of the
            // earlier columns.
            'basis: for b in 0..d {
                let mut cand = vec![0.0; d];
                cand[b] = 1.0;
                for k in 0..j {
                    let dot: f64 = (0..d).map(|i| cand[i] * w[(i, k)]).sum();
                    for (i, c) in cand.iter_mut().enumerate() {
                        *c -= dot * w[(i, k)];
                    }
                }
                let cn: f64 = cand.iter().map(|v| v * v).sum::<f64>().sqrt();
                if cn > 1e-6 {
                    for i in 0..d {
                        w[(i, j)] = cand[i] / cn;
                    }
                    norm = 1.0;
                    break 'basis;
                }
            }
            let _ = norm;
            continue;
        }
        for i in 0..d {
            w[(i, j)] /= norm;
        }
    }
}
