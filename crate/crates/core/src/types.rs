//! Domain types shared across the pipeline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::mat::{BitMat, Mat, SymOp};
use crate::scalar::Scalar;

/// Per-point assignment in a clustering result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    /// Cluster id in `1..=r`.
    Cluster(usize),
    /// Flagged by the degree threshold.
    Outlier,
    /// Held out by strict sample-splitting and never clustered.
    Unlabeled,
}

impl Label {
    pub fn cluster_id(self) -> Option<usize> {
        match self {
            Label::Cluster(k) => Some(k),
            _ => None,
        }
    }

    pub fn is_outlier(self) -> bool {
        matches!(self, Label::Outlier)
    }
}

/// N observations in d-dimensional feature space, one per row.
#[derive(Debug, Clone)]
pub struct DataMatrix<T> {
    points: Mat<T>,
}

impl<T: Scalar> DataMatrix<T> {
    pub fn new(points: Mat<T>) -> Result<Self> {
        if points.rows() == 0 || points.cols() == 0 {
            return Err(Error::input("data matrix needs at least one row and one column"));
        }
        // Mat::from_vec already rejects non-finite entries; re-check cheaply in
        // case the matrix was built elsewhere.
        if points.data().iter().any(|x| !x.is_finite()) {
            return Err(Error::input("data matrix contains non-finite entries"));
        }
        Ok(DataMatrix { points })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::input("ragged rows in data matrix"));
        }
        let mut data = Vec::with_capacity(n * d);
        for r in rows {
            data.extend(r);
        }
        DataMatrix::new(Mat::from_vec(n, d, data)?)
    }

    pub fn n(&self) -> usize {
        self.points.rows()
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    pub fn points(&self) -> &Mat<T> {
        &self.points
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.points.row(i)
    }

    /// New matrix containing the selected rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> DataMatrix<T> {
        let d = self.dim();
        let mut data = Vec::with_capacity(idx.len() * d);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        DataMatrix { points: Mat::from_vec_unchecked(idx.len(), d, data) }
    }
}

/// Gaussian similarity matrix with its scale.
#[derive(Debug, Clone)]
pub struct KernelMatrix<T> {
    k: Mat<T>,
    theta: T,
}

impl<T: Scalar> KernelMatrix<T> {
    /// `k` must be exactly symmetric with unit diagonal and entries in [0,1];
    /// the kernel constructor guarantees this by computing each unordered
    /// pair once.
    pub(crate) fn from_parts(k: Mat<T>, theta: T) -> Self {
        debug_assert_eq!(k.max_abs_asymmetry(), T::zero());
        KernelMatrix { k, theta }
    }

    pub fn n(&self) -> usize {
        self.k.rows()
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn matrix(&self) -> &Mat<T> {
        &self.k
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.k[(i, j)]
    }
}

/// Which relaxation produced a denoised matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DenoiseMethod {
    Lp,
    Sdp,
}

#[derive(Debug, Clone)]
pub(crate) enum DenoisedStorage<T> {
    Dense(Mat<T>),
    /// Binary LP solutions at large N are held one bit per entry.
    Bits(BitMat),
}

/// Estimated clustering matrix with the offset that produced it.
#[derive(Debug, Clone)]
pub struct DenoisedMatrix<T> {
    pub(crate) storage: DenoisedStorage<T>,
    gamma: T,
    method: DenoiseMethod,
}

impl<T: Scalar> DenoisedMatrix<T> {
    pub(crate) fn from_dense(x: Mat<T>, gamma: T, method: DenoiseMethod) -> Self {
        DenoisedMatrix { storage: DenoisedStorage::Dense(x), gamma, method }
    }

    /// Validated construction from a dense matrix: square, symmetric, entries
    /// within [0,1], and exactly binary for the LP method.
    pub fn new_dense(x: Mat<T>, gamma: T, method: DenoiseMethod) -> Result<Self> {
        if x.rows() != x.cols() {
            return Err(Error::input("denoised matrix must be square"));
        }
        if x.max_abs_asymmetry() > T::zero() {
            return Err(Error::input("denoised matrix must be symmetric"));
        }
        for &v in x.data() {
            if !(T::zero()..=T::one()).contains(&v) {
                return Err(Error::input("denoised entries must lie in [0,1]"));
            }
            if method == DenoiseMethod::Lp && v != T::zero() && v != T::one() {
                return Err(Error::input("LP-denoised entries must be exactly 0 or 1"));
            }
        }
        Ok(DenoisedMatrix::from_dense(x, gamma, method))
    }

    pub(crate) fn from_bits(x: BitMat, gamma: T) -> Self {
        DenoisedMatrix { storage: DenoisedStorage::Bits(x), gamma, method: DenoiseMethod::Lp }
    }

    pub fn n(&self) -> usize {
        match &self.storage {
            DenoisedStorage::Dense(m) => m.rows(),
            DenoisedStorage::Bits(b) => b.dim(),
        }
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn method(&self) -> DenoiseMethod {
        self.method
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        match &self.storage {
            DenoisedStorage::Dense(m) => m[(i, j)],
            DenoisedStorage::Bits(b) => {
                if b.get(i, j) {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }

    /// Dense view; materializes bit storage.
    pub fn to_dense(&self) -> Mat<T> {
        match &self.storage {
            DenoisedStorage::Dense(m) => m.clone(),
            DenoisedStorage::Bits(b) => {
                let n = b.dim();
                let mut m = Mat::zeros(n, n);
                for i in 0..n {
                    let row = m.row_mut(i);
                    for (wi, &w) in b.row_words(i).iter().enumerate() {
                        let mut bits = w;
                        while bits != 0 {
                            let bit = bits.trailing_zeros() as usize;
                            row[wi * 64 + bit] = T::one();
                            bits &= bits - 1;
                        }
                    }
                }
                m
            }
        }
    }

    pub fn as_sym_op(&self) -> &dyn SymOp<T> {
        match &self.storage {
            DenoisedStorage::Dense(m) => m,
            DenoisedStorage::Bits(b) => b,
        }
    }

    /// Restriction to a subset of indices (used by the degree-filtered
    /// Laplacian); always dense.
    pub fn submatrix(&self, idx: &[usize]) -> Mat<T> {
        let k = idx.len();
        let mut out = Mat::zeros(k, k);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out[(a, b)] = self.get(i, j);
            }
        }
        out
    }
}

/// Labels plus the evidence behind them.
#[derive(Debug, Clone)]
pub struct ClusterResult<T> {
    /// Primary per-point label.
    pub labels: Vec<Label>,
    /// Cluster count the spectral step used.
    pub r: usize,
    /// Rows of the spectral embedding fed to k-means.
    pub embedding: Mat<T>,
    pub kmeans_cost: T,
    /// Degree threshold applied by the outlier split, when one fired.
    pub degree_threshold: Option<T>,
    /// Spectral assignment for every point, including those later flagged as
    /// outliers.
    pub spectral_labels: Vec<usize>,
}

/// How synthetic outliers are drawn.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum OutlierModel<T> {
    /// No outliers.
    None,
    /// Uniform over the inlier bounding box with each half-width grown by
    /// `margin` times itself (margin 1.5 puts the box edge 2.5 half-widths
    /// from the center).
    UniformBox { margin: T },
    /// Uniform over an explicit box.
    UniformExplicit { bounds: Vec<(T, T)> },
    /// Isotropic Gaussian centered at the origin.
    GaussianOrigin { sigma: T },
    /// Uniform on an axis-aligned segment: coordinate `axis` spans `lo..hi`,
    /// all other coordinates are zero.
    AxisSegment { axis: usize, lo: T, hi: T },
}

/// Generative description of a mixture with outliers.
#[derive(Debug, Clone)]
pub struct MixtureSpec<T> {
    weights: Vec<T>,
    counts: Vec<usize>,
    means: Vec<Vec<T>>,
    covariances: Vec<Mat<T>>,
    outlier_model: OutlierModel<T>,
    m: usize,
}

impl<T: Scalar> MixtureSpec<T> {
    /// Build from exact per-cluster counts; mixing weights are derived.
    pub fn from_counts(
        counts: Vec<usize>,
        means: Vec<Vec<T>>,
        covariances: Vec<Mat<T>>,
        outlier_model: OutlierModel<T>,
        m: usize,
    ) -> Result<Self> {
        let r = counts.len();
        if r == 0 || means.len() != r || covariances.len() != r {
            return Err(Error::parameter("counts, means and covariances must agree in length"));
        }
        let n: usize = counts.iter().sum();
        if n == 0 {
            return Err(Error::parameter("at least one inlier required"));
        }
        if counts.iter().any(|&c| c == 0) {
            return Err(Error::parameter("every cluster needs at least one point"));
        }
        let d = means[0].len();
        if d == 0 || means.iter().any(|mu| mu.len() != d) {
            return Err(Error::parameter("means must share a positive dimension"));
        }
        for (k, cov) in covariances.iter().enumerate() {
            if cov.rows() != d || cov.cols() != d {
                return Err(Error::parameter(format!("covariance {k} is not {d}x{d}")));
            }
            if cov.max_abs_asymmetry().to_f64_lossy() > 1e-10 {
                return Err(Error::parameter(format!("covariance {k} is not symmetric")));
            }
            let (vals, _) = linalg::sym_eigendecompose(cov, d)
                .map_err(|e| Error::parameter(format!("covariance {k}: {e}")))?;
            if vals[d - 1].to_f64_lossy() < -1e-10 {
                return Err(Error::parameter(format!("covariance {k} is not PSD")));
            }
        }
        let weights = counts.iter().map(|&c| T::from_usize_lossy(c) / T::from_usize_lossy(n)).collect();
        Ok(MixtureSpec { weights, counts, means, covariances, outlier_model, m })
    }

    pub fn r(&self) -> usize {
        self.counts.len()
    }

    pub fn n(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn total_points(&self) -> usize {
        self.n() + self.m
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn means(&self) -> &[Vec<T>] {
        &self.means
    }

    pub fn covariances(&self) -> &[Mat<T>] {
        &self.covariances
    }

    pub fn outlier_model(&self) -> &OutlierModel<T> {
        &self.outlier_model
    }

    /// Minimum pairwise separation between cluster means.
    pub fn delta_min(&self) -> Option<T> {
        self.pairwise_deltas().into_iter().reduce(|a, b| if a < b { a } else { b })
    }

    pub fn delta_max(&self) -> Option<T> {
        self.pairwise_deltas().into_iter().reduce(|a, b| if a > b { a } else { b })
    }

    fn pairwise_deltas(&self) -> Vec<T> {
        let r = self.r();
        let mut out = Vec::new();
        for k in 0..r {
            for l in (k + 1)..r {
                let mut s = T::zero();
                for c in 0..self.dim() {
                    let d = self.means[k][c] - self.means[l][c];
                    s += d * d;
                }
                out.push(s.sqrt());
            }
        }
        out
    }

    /// Largest noise scale: max over clusters of the square root of the
    /// covariance's top eigenvalue.
    pub fn sigma_max(&self) -> T {
        let d = self.dim();
        let mut best = T::zero();
        for cov in &self.covariances {
            let (vals, _) = linalg::sym_eigendecompose(cov, 1).expect("validated covariance");
            best = best.max(vals[0].max(T::zero()).sqrt());
        }
        let _ = d;
        best
    }

    /// Signal-to-noise ratio `delta_min / sigma_max`; `None` for r = 1 or a
    /// zero noise scale.
    pub fn snr(&self) -> Option<T> {
        let dm = self.delta_min()?;
        let sm = self.sigma_max();
        if sm > T::zero() {
            Some(dm / sm)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eye(d: usize) -> Mat<f64> {
        Mat::identity(d)
    }

    #[test]
    fn mixture_spec_derived_quantities() {
        let spec = MixtureSpec::from_counts(
            vec![150, 150, 150],
            vec![vec![0.0, 0.0], vec![6.0, 3.0], vec![6.0, -3.0]],
            vec![eye(2), eye(2), eye(2)],
            OutlierModel::UniformBox { margin: 1.5 },
            50,
        )
        .unwrap();
        assert_eq!(spec.n(), 450);
        assert_eq!(spec.total_points(), 500);
        assert!((spec.delta_min().unwrap() - 6.0).abs() < 1e-12);
        assert!((spec.sigma_max() - 1.0).abs() < 1e-10);
        assert!((spec.snr().unwrap() - 6.0).abs() < 1e-9);
        for w in spec.weights() {
            assert!((w - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mixture_spec_rejects_bad_inputs() {
        // non-PSD covariance
        let mut bad = eye(2);
        bad[(0, 0)] = -1.0;
        assert!(MixtureSpec::from_counts(
            vec![10],
            vec![vec![0.0, 0.0]],
            vec![bad],
            OutlierModel::<f64>::None,
            0,
        )
        .is_err());
        // mismatched lengths
        assert!(MixtureSpec::from_counts(
            vec![10, 10],
            vec![vec![0.0]],
            vec![eye(1)],
            OutlierModel::<f64>::None,
            0,
        )
        .is_err());
        // empty cluster
        assert!(MixtureSpec::from_counts(
            vec![10, 0],
            vec![vec![0.0], vec![1.0]],
            vec![eye(1), eye(1)],
            OutlierModel::<f64>::None,
            0,
        )
        .is_err());
    }

    #[test]
    fn data_matrix_rejects_non_finite() {
        assert!(DataMatrix::from_rows(vec![vec![0.0, f64::NAN]]).is_err());
        assert!(DataMatrix::from_rows(vec![vec![0.0], vec![1.0, 2.0]]).is_err());
        let ok = DataMatrix::from_rows(vec![vec![0.0, 1.0], vec![2.0, 3.0]]).unwrap();
        assert_eq!(ok.n(), 2);
        assert_eq!(ok.dim(), 2);
    }
}
