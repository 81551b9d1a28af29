//! PCA projection onto the top r-1 principal directions, with optional
//! sample splitting: the basis is fitted on one random part so the projected
//! points of the other part stay independent.

use crate::error::{Error, Result};
use crate::linalg;
use crate::mat::Mat;
use crate::rng::Stream;
use crate::scalar::Scalar;
use crate::types::DataMatrix;

/// Fitted projection and the split that produced it.
#[derive(Debug, Clone)]
pub struct SplitProjection<T> {
    /// Exponent of the fitting-part size, `N_2 = ceil(N^alpha)`.
    pub alpha_split: f64,
    /// d x (r-1) orthonormal basis columns.
    pub basis: Mat<T>,
    /// Indices the basis was fitted on.
    pub p2_indices: Vec<usize>,
    /// Complementary indices that get projected.
    pub p1_indices: Vec<usize>,
    /// Set when d <= r-1 made the projection a no-op (identity basis).
    pub identity: bool,
}

/// Fit the split-PCA projection. The fitting part is sampled uniformly
/// without replacement with size `max(ceil(N^alpha), r)`; its sample
/// covariance provides the top r-1 eigenvectors.
pub fn fit_projection<T: Scalar>(
    y: &DataMatrix<T>,
    r: usize,
    alpha_split: f64,
    seed: u64,
) -> Result<SplitProjection<T>> {
    if r < 2 {
        return Err(Error::parameter("projection needs r >= 2"));
    }
    if y.n() < 2 {
        return Err(Error::input("projection needs at least two points"));
    }
    if !(0.0 < alpha_split && alpha_split < 1.0) {
        return Err(Error::parameter("alpha_split must lie in (0,1)"));
    }
    let n = y.n();
    let d = y.dim();
    if d < r - 1 {
        // nothing to reduce: identity basis, flagged
        return Ok(SplitProjection {
            alpha_split,
            basis: Mat::identity(d),
            p2_indices: Vec::new(),
            p1_indices: (0..n).collect(),
            identity: true,
        });
    }
    let n2 = ((n as f64).powf(alpha_split).ceil() as usize).max(r);
    if n2 >= n {
        return Err(Error::parameter(format!(
            "fitting part of size {n2} leaves no points to project (N = {n})"
        )));
    }
    let mut stream = Stream::new(seed);
    let p2 = stream.sample_indices(n, n2);
    let mut in_p2 = vec![false; n];
    for &i in &p2 {
        in_p2[i] = true;
    }
    let p1: Vec<usize> = (0..n).filter(|&i| !in_p2[i]).collect();
    let basis = principal_directions(y, &p2, r - 1)?;
    Ok(SplitProjection { alpha_split, basis, p2_indices: p2, p1_indices: p1, identity: false })
}

/// Fit on all points, no splitting; the practical-mode default.
pub fn fit_projection_all<T: Scalar>(y: &DataMatrix<T>, r: usize) -> Result<SplitProjection<T>> {
    if r < 2 {
        return Err(Error::parameter("projection needs r >= 2"));
    }
    let n = y.n();
    let d = y.dim();
    if d < r - 1 {
        return Ok(SplitProjection {
            alpha_split: 1.0,
            basis: Mat::identity(d),
            p2_indices: Vec::new(),
            p1_indices: (0..n).collect(),
            identity: true,
        });
    }
    let all: Vec<usize> = (0..n).collect();
    let basis = principal_directions(y, &all, r - 1)?;
    Ok(SplitProjection { alpha_split: 1.0, basis, p2_indices: Vec::new(), p1_indices: all, identity: false })
}

/// Top `k` eigenvectors of the sample covariance of the selected rows.
/// Covariance accumulation runs in a fixed index order for determinism.
fn principal_directions<T: Scalar>(y: &DataMatrix<T>, idx: &[usize], k: usize) -> Result<Mat<T>> {
    let d = y.dim();
    let m = idx.len();
    if m == 0 {
        return Err(Error::input("empty fitting set"));
    }
    let inv_m = T::one() / T::from_usize_lossy(m);
    let mut mean = vec![T::zero(); d];
    for &i in idx {
        for (c, v) in y.row(i).iter().enumerate() {
            mean[c] += *v;
        }
    }
    for v in &mut mean {
        *v *= inv_m;
    }
    let mut cov = Mat::zeros(d, d);
    for &i in idx {
        let row = y.row(i);
        for a in 0..d {
            let da = row[a] - mean[a];
            for b in a..d {
                cov[(a, b)] += da * (row[b] - mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] * inv_m;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let (_, vecs) = linalg::sym_eigendecompose(&cov, k)?;
    Ok(vecs)
}

/// Project the P1 rows through the fitted basis. Returns the reduced data and
/// the map back to original row indices.
pub fn project<T: Scalar>(
    y: &DataMatrix<T>,
    proj: &SplitProjection<T>,
) -> Result<(DataMatrix<T>, Vec<usize>)> {
    if proj.basis.rows() != y.dim() {
        return Err(Error::input(format!(
            "projection fitted on dimension {}, data has {}",
            proj.basis.rows(),
            y.dim()
        )));
    }
    let k = proj.basis.cols();
    let mut data = Vec::with_capacity(proj.p1_indices.len() * k);
    for &i in &proj.p1_indices {
        data.extend(proj.basis.transpose_apply(y.row(i)));
    }
    let reduced = DataMatrix::new(Mat::from_vec_unchecked(proj.p1_indices.len(), k, data))?;
    Ok((reduced, proj.p1_indices.clone()))
}
