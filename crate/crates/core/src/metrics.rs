//! Clustering evaluation against ground truth: inlier accuracy under optimal
//! label matching, outlier detection accuracy, and their combination.

use crate::error::{Error, Result};
use crate::types::Label;

/// Accuracy summary under the best label bijection.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub inlier_accuracy: f64,
    pub outlier_accuracy: f64,
    pub overall_accuracy: f64,
    /// Agreement counts after matching: `confusion[p][t]` counts points with
    /// matched predicted cluster `p+1` and true cluster `t+1`.
    pub confusion: Vec<Vec<usize>>,
    /// `permutation[p] = Some(t)` maps predicted cluster `p+1` to true
    /// cluster `t+1`; unmatched predicted clusters map to `None`.
    pub permutation: Vec<Option<usize>>,
}

/// Score a prediction. True labels use `Label::Outlier` for planted outliers.
///
/// Matching maximizes inlier agreement over bijections between predicted and
/// true cluster ids; predicted outliers on true inliers count as inlier
/// errors, and an undetected outlier counts against outlier accuracy no
/// matter which cluster it landed in. Overall accuracy is
/// `(correct inliers + correctly detected outliers) / N`.
pub fn evaluate(pred: &[Label], truth: &[Label]) -> Result<EvalReport> {
    if pred.len() != truth.len() {
        return Err(Error::input(format!(
            "prediction has {} labels, truth has {}",
            pred.len(),
            truth.len()
        )));
    }
    let n = truth.len();
    let n_true_inliers = truth.iter().filter(|l| !l.is_outlier()).count();
    if n_true_inliers == 0 {
        return Err(Error::input("truth must contain at least one inlier"));
    }
    let max_id = |labels: &[Label]| {
        labels.iter().filter_map(|l| l.cluster_id()).max().unwrap_or(0)
    };
    let rp = max_id(pred);
    let rt = max_id(truth);

    // agreement counts over inliers
    let mut agree = vec![vec![0usize; rt]; rp];
    for (p, t) in pred.iter().zip(truth.iter()) {
        if let (Some(pc), Some(tc)) = (p.cluster_id(), t.cluster_id()) {
            agree[pc - 1][tc - 1] += 1;
        }
    }

    let assignment = if rp == 0 || rt == 0 {
        vec![None; rp]
    } else {
        max_assignment(&agree)
    };

    let mut correct_inliers = 0usize;
    for (p, row) in agree.iter().enumerate() {
        if let Some(t) = assignment[p] {
            correct_inliers += row[t];
        }
    }
    let correct_outliers = pred
        .iter()
        .zip(truth.iter())
        .filter(|(p, t)| p.is_outlier() && t.is_outlier())
        .count();
    let n_true_outliers = n - n_true_inliers;

    Ok(EvalReport {
        inlier_accuracy: correct_inliers as f64 / n_true_inliers as f64,
        outlier_accuracy: if n_true_outliers == 0 {
            1.0
        } else {
            correct_outliers as f64 / n_true_outliers as f64
        },
        overall_accuracy: (correct_inliers + correct_outliers) as f64 / n as f64,
        confusion: agree,
        permutation: assignment,
    })
}

/// Convenience: evaluate numeric labelings where 0 encodes an outlier and
/// positive integers are cluster ids.
pub fn evaluate_ids(pred: &[usize], truth: &[usize]) -> Result<EvalReport> {
    let conv = |xs: &[usize]| -> Vec<Label> {
        xs.iter().map(|&x| if x == 0 { Label::Outlier } else { Label::Cluster(x) }).collect()
    };
    evaluate(&conv(pred), &conv(truth))
}

/// Maximum-weight assignment of predicted clusters (rows) to true clusters
/// (columns): the Hungarian method on the padded square matrix. Rows beyond
/// the matched set come back as `None`.
fn max_assignment(weights: &[Vec<usize>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights[0].len();
    let n = rows.max(cols);
    let big = weights.iter().flatten().copied().max().unwrap_or(0) as i64;
    // convert to min-cost on a padded square matrix
    let cost: Vec<Vec<i64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i < rows && j < cols {
                        big - weights[i][j] as i64
                    } else {
                        big
                    }
                })
                .collect()
        })
        .collect();
    let row_for_col = hungarian_min(&cost);
    let mut out = vec![None; rows];
    for (col, row) in row_for_col.iter().enumerate() {
        if let Some(r) = *row {
            if r < rows && col < cols && weights[r][col] > 0 {
                out[r] = Some(col);
            }
        }
    }
    out
}

/// O(n^3) Hungarian algorithm (potentials form) for square min-cost
/// assignment; returns, per column, the assigned row.
fn hungarian_min(cost: &[Vec<i64>]) -> Vec<Option<usize>> {
    let n = cost.len();
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1]; // p[j]: row matched to column j (1-based)
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
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
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_for_col = vec![None; n];
    for j in 1..=n {
        if p[j] != 0 {
            row_for_col[j - 1] = Some(p[j] - 1);
        }
    }
    row_for_col
}
