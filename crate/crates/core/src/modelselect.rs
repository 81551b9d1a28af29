//! Cluster-count estimation from the eigengap of the normalized graph
//! Laplacian of the degree-filtered denoised matrix.

use crate::error::{Error, Result};
use crate::linalg;
use crate::mat::Mat;
use crate::outlier;
use crate::scalar::Scalar;
use crate::stats::quantile_sorted;
use crate::types::DenoisedMatrix;

/// What the eigengap saw.
#[derive(Debug, Clone)]
pub struct EigengapReport<T> {
    pub r_hat: usize,
    /// Ascending spectrum of the filtered normalized Laplacian (first
    /// `max_r + 1` values).
    pub laplacian_eigenvalues: Vec<T>,
    /// Index `k` whose gap `lambda_{k+1} - lambda_k` was selected (1-based).
    pub gap_index: usize,
    pub beta_tilde: T,
    /// Set when no candidate satisfied the near-zero floor and the plain
    /// argmax gap was used instead.
    pub low_confidence: bool,
    /// Indices that survived the degree filter.
    pub kept: Vec<usize>,
}

/// Eigenvalues below this are treated as "near zero" when picking the gap.
const GAP_FLOOR: f64 = 0.1;

/// Estimate the cluster count: filter to the top `beta_tilde` fraction by
/// degree, build `L = I - D^{-1/2} X D^{-1/2}` on the kept submatrix, and pick
/// the largest gap among the near-zero leading eigenvalues.
pub fn estimate_r<T: Scalar>(
    x: &DenoisedMatrix<T>,
    beta_tilde: T,
    max_r: usize,
) -> Result<EigengapReport<T>> {
    let bt = beta_tilde.to_f64_lossy();
    if !(0.0 < bt && bt < 1.0) {
        return Err(Error::parameter("beta_tilde must lie in (0,1)"));
    }
    if max_r == 0 {
        return Err(Error::parameter("max_r must be at least 1"));
    }
    let deg = outlier::degrees(x);
    let mut sorted = deg.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite degrees"));
    // keep the top beta_tilde fraction: threshold at the (1 - beta_tilde)
    // degree quantile
    let tau = quantile_sorted(&sorted, 1.0 - bt);
    let kept: Vec<usize> = (0..deg.len()).filter(|&i| deg[i] >= tau).collect();
    if kept.len() < 2 {
        return Err(Error::input("degree filter left fewer than two points"));
    }
    let sub = x.submatrix(&kept);
    let lap = normalized_laplacian(&sub);
    let m = lap.rows();
    let (vals_desc, _) = linalg::sym_eigendecompose(&lap, m)?;
    let mut vals: Vec<T> = vals_desc;
    vals.reverse(); // ascending
    let kmax = max_r.min(m - 1);
    let floor = T::from_f64_lossy(GAP_FLOOR);
    let mut best: Option<(usize, T)> = None;
    let mut best_any: (usize, T) = (1, vals[1] - vals[0]);
    for k in 1..=kmax {
        let gap = vals[k] - vals[k - 1];
        if gap > best_any.1 {
            best_any = (k, gap);
        }
        if vals[k - 1] < floor && best.map_or(true, |(_, g)| gap > g) {
            best = Some((k, gap));
        }
    }
    let (r_hat, low_confidence) = match best {
        Some((k, _)) => (k, false),
        None => (best_any.0, true),
    };
    Ok(EigengapReport {
        r_hat,
        laplacian_eigenvalues: vals.into_iter().take(kmax + 1).collect(),
        gap_index: r_hat,
        beta_tilde,
        low_confidence,
        kept,
    })
}

/// `I - D^{-1/2} X D^{-1/2}` with zero-degree rows left isolated.
fn normalized_laplacian<T: Scalar>(x: &Mat<T>) -> Mat<T> {
    let n = x.rows();
    let mut inv_sqrt = vec![T::zero(); n];
    for i in 0..n {
        let mut s = T::zero();
        for j in 0..n {
            s += x[(i, j)];
        }
        if s > T::zero() {
            inv_sqrt[i] = T::one() / s.sqrt();
        }
    }
    let mut lap = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let off = inv_sqrt[i] * x[(i, j)] * inv_sqrt[j];
            lap[(i, j)] = if i == j { T::one() - off } else { -off };
        }
    }
    lap.symmetrize();
    lap
}
