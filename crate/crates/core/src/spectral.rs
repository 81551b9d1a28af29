//! Spectral rounding: embed via the leading eigenvectors of the denoised
//! matrix, then k-means on the embedding rows.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::mat::Mat;
use crate::rng::{derive_seed, Stream};
use crate::scalar::Scalar;
use crate::types::{ClusterResult, DenoisedMatrix, Label};

/// k-means configuration. The `(1+eps)` approximation quality is operational,
/// not certified: k-means++ seeding amplified by restarts.
#[derive(Debug, Clone)]
pub struct KMeansConfig<T> {
    pub restarts: usize,
    pub max_iters: usize,
    /// Relative cost decrease below which Lloyd iteration stops.
    pub tol: T,
    pub seed: u64,
}

impl<T: Scalar> Default for KMeansConfig<T> {
    fn default() -> Self {
        KMeansConfig { restarts: 10, max_iters: 300, tol: T::from_f64_lossy(1e-8), seed: 0 }
    }
}

impl<T: Scalar> KMeansConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::parameter("restarts must be at least 1"));
        }
        if self.max_iters == 0 {
            return Err(Error::parameter("max_iters must be at least 1"));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Rows of the top-`r` eigenvector matrix of the denoised clustering matrix.
pub fn embed<T: Scalar>(x: &DenoisedMatrix<T>, r: usize) -> Result<Mat<T>> {
    let n = x.n();
    if r == 0 || r > n {
        return Err(Error::parameter(format!("r={r} outside 1..={n}")));
    }
    if n > linalg::ITERATIVE_THRESHOLD && r * 4 < n {
        let (_, vecs) = linalg::topk_eigenpairs(x.as_sym_op(), r, 1e-9)?;
        return Ok(vecs);
    }
    let dense = x.to_dense();
    let (_, vecs) = linalg::sym_eigendecompose(&dense, r)?;
    Ok(vecs)
}

/// Lloyd's algorithm with k-means++ seeding and restarts. Returns 1-based
/// labels and the final cost; deterministic for a fixed seed, independent of
/// restart scheduling.
pub fn kmeans<T: Scalar>(
    points: &Mat<T>,
    r: usize,
    cfg: &KMeansConfig<T>,
) -> Result<(Vec<usize>, T)> {
    cfg.validate()?;
    let n = points.rows();
    if r == 0 || r > n {
        return Err(Error::parameter(format!("r={r} outside 1..={n}")));
    }
    let runs: Vec<(Vec<usize>, T)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|restart| {
            let mut stream = Stream::new(derive_seed(cfg.seed, &format!("kmeans-restart-{restart}")));
            lloyd_once(points, r, cfg, &mut stream)
        })
        .collect();
    let best = runs
        .into_iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite costs"))
        .expect("at least one restart");
    Ok((best.0.iter().map(|&k| k + 1).collect(), best.1))
}

fn lloyd_once<T: Scalar>(
    points: &Mat<T>,
    r: usize,
    cfg: &KMeansConfig<T>,
    stream: &mut Stream,
) -> (Vec<usize>, T) {
    let n = points.rows();
    let d = points.cols();
    let mut centroids = plus_plus_seeds(points, r, stream);
    let mut labels = vec![0usize; n];
    let mut prev_cost = T::infinity();
    let mut cost = T::infinity();
    let mut repaired = false;
    for _iter in 0..cfg.max_iters {
        // assignment; ties go to the lowest cluster index
        cost = T::zero();
        for i in 0..n {
            let row = points.row(i);
            let mut best = T::infinity();
            let mut arg = 0usize;
            for (k, c) in centroids.iter().enumerate() {
                let mut dist = T::zero();
                for j in 0..d {
                    let t = row[j] - c[j];
                    dist += t * t;
                }
                if dist < best {
                    best = dist;
                    arg = k;
                }
            }
            labels[i] = arg;
            cost += best;
        }
        // monotone up to rounding noise; a forced empty-cluster repair may
        // legitimately bump the next assignment cost
        debug_assert!(
            repaired
                || !prev_cost.is_finite()
                || cost <= prev_cost * (T::one() + T::from_f64_lossy(1e-9)) + T::epsilon(),
            "Lloyd cost must not increase"
        );
        repaired = false;
        // convergence on relative decrease
        if prev_cost.is_finite() {
            let denom = prev_cost.max(T::from_f64_lossy(1e-30));
            if (prev_cost - cost) / denom < cfg.tol {
                break;
            }
        }
        prev_cost = cost;
        // update step
        let mut sums = vec![vec![T::zero(); d]; r];
        let mut counts = vec![0usize; r];
        for i in 0..n {
            counts[labels[i]] += 1;
            let row = points.row(i);
            let acc = &mut sums[labels[i]];
            for j in 0..d {
                acc[j] += row[j];
            }
        }
        for k in 0..r {
            if counts[k] == 0 {
                // empty-cluster repair: seize the point farthest from its centroid
                let far = farthest_point(points, &centroids, &labels);
                labels[far] = k;
                centroids[k] = points.row(far).to_vec();
                repaired = true;
            } else {
                let inv = T::one() / T::from_usize_lossy(counts[k]);
                for j in 0..d {
                    centroids[k][j] = sums[k][j] * inv;
                }
            }
        }
    }
    (labels, cost)
}

fn farthest_point<T: Scalar>(points: &Mat<T>, centroids: &[Vec<T>], labels: &[usize]) -> usize {
    let mut worst = T::neg_infinity();
    let mut arg = 0;
    for i in 0..points.rows() {
        let c = &centroids[labels[i]];
        let mut dist = T::zero();
        for j in 0..points.cols() {
            let t = points.row(i)[j] - c[j];
            dist += t * t;
        }
        if dist > worst {
            worst = dist;
            arg = i;
        }
    }
    arg
}

/// k-means++ seeding: first centroid uniform, the rest sampled with
/// probability proportional to squared distance from the chosen set.
fn plus_plus_seeds<T: Scalar>(points: &Mat<T>, r: usize, stream: &mut Stream) -> Vec<Vec<T>> {
    let n = points.rows();
    let d = points.cols();
    let mut centroids: Vec<Vec<T>> = Vec::with_capacity(r);
    centroids.push(points.row(stream.index(n)).to_vec());
    let mut best_dist: Vec<T> = (0..n)
        .map(|i| {
            let mut s = T::zero();
            for j in 0..d {
                let t = points.row(i)[j] - centroids[0][j];
                s += t * t;
            }
            s
        })
        .collect();
    while centroids.len() < r {
        let pick = match stream.weighted_index(&best_dist) {
            Some(i) => i,
            // all remaining distances zero: duplicate points; any index works
            None => stream.index(n),
        };
        let c = points.row(pick).to_vec();
        for i in 0..n {
            let mut s = T::zero();
            for j in 0..d {
                let t = points.row(i)[j] - c[j];
                s += t * t;
            }
            if s < best_dist[i] {
                best_dist[i] = s;
            }
        }
        centroids.push(c);
    }
    centroids
}

/// Embed then round: labels for every point, outlier field left unset.
pub fn cluster<T: Scalar>(
    x: &DenoisedMatrix<T>,
    r: usize,
    cfg: &KMeansConfig<T>,
) -> Result<ClusterResult<T>> {
    let embedding = embed(x, r)?;
    let (labels, cost) = kmeans(&embedding, r, cfg)?;
    Ok(ClusterResult {
        labels: labels.iter().map(|&k| Label::Cluster(k)).collect(),
        r,
        embedding,
        kmeans_cost: cost,
        degree_threshold: None,
        spectral_labels: labels,
    })
}
