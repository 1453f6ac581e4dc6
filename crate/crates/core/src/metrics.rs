//! Clustering evaluation against ground truth: Hungarian-matched accuracy,
//! normalized mutual information, purity and adjusted Rand index, plus the
//! confusion matrix they are all computed from.

use crate::error::{Error, Result};

/// Evaluation summary. `confusion[t][p]` counts samples with truth class
/// index `t` and predicted cluster index `p` (indices into the sorted
/// distinct label values).
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub acc: f64,
    pub nmi: f64,
    pub pur: f64,
    pub ari: f64,
    pub confusion: Vec<Vec<u64>>,
    pub truth_classes: Vec<usize>,
    pub pred_classes: Vec<usize>,
}

fn distinct_sorted(labels: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = labels.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

struct Contingency {
    /// counts[t][p]
    counts: Vec<Vec<u64>>,
    truth_classes: Vec<usize>,
    pred_classes: Vec<usize>,
    n: u64,
}

fn contingency(pred: &[usize], truth: &[usize]) -> Result<Contingency> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::InvalidParam {
            name: "labels",
            detail: "label sequences are empty".into(),
        });
    }
    let truth_classes = distinct_sorted(truth);
    let pred_classes = distinct_sorted(pred);
    let t_index = |v: usize| truth_classes.binary_search(&v).unwrap();
    let p_index = |v: usize| pred_classes.binary_search(&v).unwrap();
    let mut counts = vec![vec![0u64; pred_classes.len()]; truth_classes.len()];
    for (&p, &t) in pred.iter().zip(truth) {
        counts[t_index(t)][p_index(p)] += 1;
    }
    Ok(Contingency {
        counts,
        truth_classes,
        pred_classes,
        n: pred.len() as u64,
    })
}

/// Minimum-cost perfect matching on a square cost matrix by the
/// augmenting-path algorithm with potentials; O(k³). Returns the column
/// assigned to each row.
fn assignment_min_cost(cost: &[Vec<i64>]) -> Vec<usize> {
    let k = cost.len();
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; k + 1];
    let mut v = vec![0i64; k + 1];
    let mut matched_row = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=k {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; k];
    for j in 1..=k {
        if matched_row[j] > 0 {
            row_to_col[matched_row[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Clustering accuracy under the best one-to-one matching of predicted
/// clusters to truth classes.
pub fn hungarian_accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let k = table.truth_classes.len().max(table.pred_classes.len());
    let mut cost = vec![vec![0i64; k]; k];
    for (t, row) in table.counts.iter().enumerate() {
        for (p, &c) in row.iter().enumerate() {
            cost[t][p] = -(c as i64);
        }
    }
    let assignment = assignment_min_cost(&cost);
    let mut matched = 0u64;
    for (t, &p) in assignment.iter().enumerate() {
        if t < table.counts.len() && p < table.pred_classes.len() {
            matched += table.counts[t][p];
        }
    }
    Ok(matched as f64 / table.n as f64)
}

fn entropy(margins: &[u64], n: u64) -> f64 {
    margins
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information normalized by the geometric mean of the two label
/// entropies; `0/0` maps to 0.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let n = table.n;
    let truth_margin: Vec<u64> = table.counts.iter().map(|r| r.iter().sum()).collect();
    let pred_margin: Vec<u64> = (0..table.pred_classes.len())
        .map(|p| table.counts.iter().map(|r| r[p]).sum())
        .collect();
    let h_truth = entropy(&truth_margin, n);
    let h_pred = entropy(&pred_margin, n);

    let mut mi = 0.0;
    for (t, row) in table.counts.iter().enumerate() {
        for (p, &c) in row.iter().enumerate() {
            if c > 0 {
                let joint = c as f64 / n as f64;
                let ratio = (c as f64 * n as f64) / (truth_margin[t] as f64 * pred_margin[p] as f64);
                mi += joint * ratio.ln();
            }
        }
    }
    let denom = (h_pred * h_truth).sqrt();
    if denom == 0.0 {
        Ok(0.0)
    } else {
        Ok(mi / denom)
    }
}

/// Fraction of samples covered by each cluster's majority class.
pub fn purity(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let mut covered = 0u64;
    for p in 0..table.pred_classes.len() {
        covered += table.counts.iter().map(|r| r[p]).max().unwrap_or(0);
    }
    Ok(covered as f64 / table.n as f64)
}

fn choose2(c: u64) -> u128 {
    let c = c as u128;
    if c < 2 {
        0
    } else {
        c * (c - 1) / 2
    }
}

/// Adjusted Rand index by pair counting with the expected-index correction.
/// A degenerate denominator (both margins force full agreement) maps to 1.
pub fn ari(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let truth_margin: Vec<u64> = table.counts.iter().map(|r| r.iter().sum()).collect();
    let pred_margin: Vec<u64> = (0..table.pred_classes.len())
        .map(|p| table.counts.iter().map(|r| r[p]).sum())
        .collect();

    let index: u128 = table
        .counts
        .iter()
        .flat_map(|r| r.iter())
        .map(|&c| choose2(c))
        .sum();
    let sum_truth: u128 = truth_margin.iter().map(|&c| choose2(c)).sum();
    let sum_pred: u128 = pred_margin.iter().map(|&c| choose2(c)).sum();
    let total = choose2(table.n);
    if total == 0 {
        return Ok(1.0);
    }
    let expected = (sum_truth as f64) * (sum_pred as f64) / (total as f64);
    let max_index = 0.5 * (sum_truth as f64 + sum_pred as f64);
    let denom = max_index - expected;
    if denom == 0.0 {
        Ok(1.0)
    } else {
        Ok((index as f64 - expected) / denom)
    }
}

/// All four metrics plus the confusion matrix in one pass.
pub fn evaluate(pred: &[usize], truth: &[usize]) -> Result<EvalReport> {
    let table = contingency(pred, truth)?;
    Ok(EvalReport {
        acc: hungarian_accuracy(pred, truth)?,
        nmi: nmi(pred, truth)?,
        pur: purity(pred, truth)?,
        ari: ari(pred, truth)?,
        confusion: table.counts,
        truth_classes: table.truth_classes,
        pred_classes: table.pred_classes,
    })
}
