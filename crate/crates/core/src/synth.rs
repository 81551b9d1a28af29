//! Synthetic dataset generators for the benchmark experiments, with ground
//! truth attached.

use crate::error::{Error, Result};
use crate::linalg;
use crate::mat::Mat;
use crate::rng::{derive_seed, Stream};
use crate::scalar::Scalar;
use crate::types::{DataMatrix, Label, MixtureSpec, OutlierModel};

/// Generated sample plus everything needed to score it.
#[derive(Debug, Clone)]
pub struct SyntheticDataset<T> {
    pub data: DataMatrix<T>,
    pub true_labels: Vec<Label>,
    pub spec: MixtureSpec<T>,
    pub seed: u64,
}

/// Draw a dataset: exact per-cluster counts, Gaussian noise shaped by each
/// covariance, outliers from the spec's model, and a final seeded shuffle of
/// rows and labels in lockstep.
pub fn gen_gmm<T: Scalar>(spec: &MixtureSpec<T>, seed: u64) -> Result<SyntheticDataset<T>> {
    gen_gmm_with(spec, seed, true)
}

/// As [`gen_gmm`], with the shuffle switchable so tests can exercise the
/// grouped row order too.
pub fn gen_gmm_with<T: Scalar>(
    spec: &MixtureSpec<T>,
    seed: u64,
    shuffle: bool,
) -> Result<SyntheticDataset<T>> {
    let d = spec.dim();
    let n_total = spec.total_points();
    let mut rows: Vec<T> = Vec::with_capacity(n_total * d);
    let mut labels: Vec<Label> = Vec::with_capacity(n_total);
    let mut stream = Stream::new(derive_seed(seed, "inliers"));

    let roots: Vec<Mat<T>> = spec
        .covariances()
        .iter()
        .map(|cov| matrix_sqrt(cov))
        .collect::<Result<_>>()?;

    for (k, (&count, mu)) in spec.counts().iter().zip(spec.means()).enumerate() {
        for _ in 0..count {
            let z: Vec<T> = (0..d).map(|_| stream.standard_normal()).collect();
            let noise = roots[k].transpose_apply(&z); // symmetric root
            for c in 0..d {
                rows.push(mu[c] + noise[c]);
            }
            labels.push(Label::Cluster(k + 1));
        }
    }

    if spec.m() > 0 {
        let inliers = Mat::from_vec_unchecked(spec.n(), d, rows.clone());
        let outliers = gen_outliers(&inliers, spec.outlier_model(), spec.m(), derive_seed(seed, "outliers"))?;
        rows.extend_from_slice(outliers.data());
        labels.extend(std::iter::repeat(Label::Outlier).take(spec.m()));
    }

    let mut order: Vec<usize> = (0..n_total).collect();
    if shuffle {
        let mut s = Stream::new(derive_seed(seed, "shuffle"));
        s.shuffle(&mut order);
    }
    let mut shuffled = Vec::with_capacity(n_total * d);
    let mut shuffled_labels = Vec::with_capacity(n_total);
    for &i in &order {
        shuffled.extend_from_slice(&rows[i * d..(i + 1) * d]);
        shuffled_labels.push(labels[i]);
    }
    Ok(SyntheticDataset {
        data: DataMatrix::new(Mat::from_vec_unchecked(n_total, d, shuffled))?,
        true_labels: shuffled_labels,
        spec: spec.clone(),
        seed,
    })
}

/// Symmetric PSD square root via eigendecomposition (tolerates singular
/// covariances, unlike a plain Cholesky).
fn matrix_sqrt<T: Scalar>(cov: &Mat<T>) -> Result<Mat<T>> {
    let d = cov.rows();
    let (vals, vecs) = linalg::sym_eigendecompose(cov, d)?;
    let mut out = Mat::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let mut s = T::zero();
            for c in 0..d {
                s += vecs[(a, c)] * vals[c].max(T::zero()).sqrt() * vecs[(b, c)];
            }
            out[(a, b)] = s;
        }
    }
    Ok(out)
}

fn gen_outliers<T: Scalar>(
    inliers: &Mat<T>,
    model: &OutlierModel<T>,
    m: usize,
    seed: u64,
) -> Result<Mat<T>> {
    let d = inliers.cols();
    let mut stream = Stream::new(seed);
    match model {
        OutlierModel::None => Err(Error::parameter("outlier count > 0 but model is None")),
        OutlierModel::UniformBox { margin } => {
            let bounds = inflated_bounds(inliers, *margin)?;
            Ok(uniform_box(&bounds, m, &mut stream))
        }
        OutlierModel::UniformExplicit { bounds } => {
            if bounds.len() != d {
                return Err(Error::parameter("explicit bounds dimension mismatch"));
            }
            if bounds.iter().any(|(lo, hi)| !(hi > lo)) {
                return Err(Error::parameter("degenerate outlier box"));
            }
            Ok(uniform_box(bounds, m, &mut stream))
        }
        OutlierModel::GaussianOrigin { sigma } => {
            let mut data = Vec::with_capacity(m * d);
            for _ in 0..m * d {
                data.push(stream.standard_normal::<T>() * *sigma);
            }
            Ok(Mat::from_vec_unchecked(m, d, data))
        }
        OutlierModel::AxisSegment { axis, lo, hi } => {
            if *axis >= d {
                return Err(Error::parameter("segment axis outside data dimension"));
            }
            if !(hi > lo) {
                return Err(Error::parameter("degenerate segment"));
            }
            let mut data = vec![T::zero(); m * d];
            for i in 0..m {
                data[i * d + axis] = stream.uniform(*lo, *hi);
            }
            Ok(Mat::from_vec_unchecked(m, d, data))
        }
    }
}

/// Bounding box of the rows with each half-width grown by `margin` times
/// itself. A box that is degenerate in every dimension is rejected.
fn inflated_bounds<T: Scalar>(points: &Mat<T>, margin: T) -> Result<Vec<(T, T)>> {
    let d = points.cols();
    let mut bounds = Vec::with_capacity(d);
    let mut any_width = false;
    for c in 0..d {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 0..points.rows() {
            let v = points[(i, c)];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let center = (lo + hi) / (T::one() + T::one());
        let half = (hi - lo) / (T::one() + T::one()) * (T::one() + margin);
        if half > T::zero() {
            any_width = true;
        }
        bounds.push((center - half, center + half));
    }
    if !any_width {
        return Err(Error::input("degenerate outlier box: all inliers coincide"));
    }
    Ok(bounds)
}

/// i.i.d. uniform draws over a box, one row per point.
pub fn gen_uniform_outliers<T: Scalar>(
    bounds: &[(T, T)],
    m: usize,
    seed: u64,
) -> Result<Mat<T>> {
    if bounds.is_empty() {
        return Err(Error::parameter("empty bounds"));
    }
    if bounds.iter().all(|(lo, hi)| !(hi > lo)) {
        return Err(Error::input("degenerate outlier box"));
    }
    let mut stream = Stream::new(seed);
    Ok(uniform_box(bounds, m, &mut stream))
}

fn uniform_box<T: Scalar>(bounds: &[(T, T)], m: usize, stream: &mut Stream) -> Mat<T> {
    let d = bounds.len();
    let mut data = Vec::with_capacity(m * d);
    for _ in 0..m {
        for (lo, hi) in bounds {
            data.push(if hi > lo { stream.uniform(*lo, *hi) } else { *lo });
        }
    }
    Mat::from_vec_unchecked(m, d, data)
}

/// Equal-sized spherical clusters at the vertices `s * e_k` of the scaled
/// standard simplex in `r` dimensions (optionally zero-padded to `dim`),
/// identity covariance, outliers from a wide Gaussian at the origin.
pub fn gen_simplex<T: Scalar>(
    r: usize,
    scale: T,
    per_cluster: usize,
    m: usize,
    outlier_sigma: T,
    dim: Option<usize>,
    seed: u64,
) -> Result<SyntheticDataset<T>> {
    if r < 2 {
        return Err(Error::parameter("simplex mixture needs r >= 2"));
    }
    let d = dim.unwrap_or(r);
    if d < r {
        return Err(Error::parameter("padded dimension must be at least r"));
    }
    let means: Vec<Vec<T>> = (0..r)
        .map(|k| {
            let mut mu = vec![T::zero(); d];
            mu[k] = scale;
            mu
        })
        .collect();
    let covs = vec![Mat::identity(d); r];
    let model = if m == 0 {
        OutlierModel::None
    } else {
        OutlierModel::GaussianOrigin { sigma: outlier_sigma }
    };
    let spec = MixtureSpec::from_counts(vec![per_cluster; r], means, covs, model, m)?;
    gen_gmm(&spec, seed)
}

/// Unit-variance spherical clusters on a regular polygon in the plane with
/// adjacent separation `base_sep`, after which cluster 2's mean is pulled
/// toward cluster 1's until their separation is `delta12`.
pub fn gen_weak_separation<T: Scalar>(
    base_sep: T,
    delta12: T,
    r: usize,
    per_cluster: usize,
    seed: u64,
) -> Result<SyntheticDataset<T>> {
    if r < 2 {
        return Err(Error::parameter("weak separation needs r >= 2"));
    }
    if delta12 > base_sep {
        return Err(Error::parameter("delta12 must not exceed base_sep"));
    }
    let spec = weak_separation_spec(base_sep, delta12, r, per_cluster)?;
    gen_gmm(&spec, seed)
}

/// The mixture description behind [`gen_weak_separation`].
pub fn weak_separation_spec<T: Scalar>(
    base_sep: T,
    delta12: T,
    r: usize,
    per_cluster: usize,
) -> Result<MixtureSpec<T>> {
    let two = T::one() + T::one();
    let angle_step = 2.0 * std::f64::consts::PI / r as f64;
    // circumradius putting adjacent vertices base_sep apart
    let circum = base_sep / (two * T::from_f64_lossy((angle_step / 2.0).sin()));
    let mut means: Vec<Vec<T>> = (0..r)
        .map(|k| {
            let a = angle_step * k as f64;
            vec![circum * T::from_f64_lossy(a.cos()), circum * T::from_f64_lossy(a.sin())]
        })
        .collect();
    // pull cluster 2 toward cluster 1
    let (dx, dy) = (means[1][0] - means[0][0], means[1][1] - means[0][1]);
    let norm = (dx * dx + dy * dy).sqrt();
    means[1] = vec![means[0][0] + dx / norm * delta12, means[0][1] + dy / norm * delta12];
    MixtureSpec::from_counts(
        vec![per_cluster; r],
        means,
        vec![Mat::identity(2); r],
        OutlierModel::None,
        0,
    )
}

/// Table-style model presets used across the benchmark suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Three spherical unit-variance clusters of 150 points, 50 box outliers.
    Table1Balanced,
    /// One wide cluster of 500 plus two tight clusters of 150, 50 outliers.
    Table1Unbalanced,
    /// Two elongated clusters of 200, 25 outliers.
    Table1Ellipsoidal,
    /// Two far clusters of 150 with 5 outliers on the y-axis.
    Fig1,
    /// 15 simplex clusters of 400 with 400 wide-Gaussian outliers.
    Simplex,
    /// Six polygon clusters of 100, separation 5, cluster 2 pulled to
    /// distance 2 from cluster 1.
    WeakSep,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Preset> {
        Ok(match name {
            "table1-balanced" => Preset::Table1Balanced,
            "table1-unbalanced" => Preset::Table1Unbalanced,
            "table1-ellipsoidal" => Preset::Table1Ellipsoidal,
            "fig1" => Preset::Fig1,
            "simplex" => Preset::Simplex,
            "weaksep" => Preset::WeakSep,
            other => return Err(Error::parameter(format!("unknown preset `{other}`"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Table1Balanced => "table1-balanced",
            Preset::Table1Unbalanced => "table1-unbalanced",
            Preset::Table1Ellipsoidal => "table1-ellipsoidal",
            Preset::Fig1 => "fig1",
            Preset::Simplex => "simplex",
            Preset::WeakSep => "weaksep",
        }
    }

    /// True cluster count of the preset.
    pub fn r(self) -> usize {
        match self {
            Preset::Table1Balanced | Preset::Table1Unbalanced => 3,
            Preset::Table1Ellipsoidal | Preset::Fig1 => 2,
            Preset::Simplex => 15,
            Preset::WeakSep => 6,
        }
    }
}

/// Instantiate a preset's mixture description.
pub fn preset_spec<T: Scalar>(preset: Preset) -> MixtureSpec<T> {
    let f = T::from_f64_lossy;
    let diag = |a: f64, b: f64| {
        let mut m = Mat::zeros(2, 2);
        m[(0, 0)] = f(a);
        m[(1, 1)] = f(b);
        m
    };
    match preset {
        Preset::Table1Balanced => MixtureSpec::from_counts(
            vec![150, 150, 150],
            vec![vec![f(0.0), f(0.0)], vec![f(6.0), f(3.0)], vec![f(6.0), f(-3.0)]],
            vec![diag(1.0, 1.0), diag(1.0, 1.0), diag(1.0, 1.0)],
            OutlierModel::UniformBox { margin: f(1.5) },
            50,
        ),
        Preset::Table1Unbalanced => MixtureSpec::from_counts(
            vec![500, 150, 150],
            vec![vec![f(0.0), f(0.0)], vec![f(20.0), f(3.0)], vec![f(20.0), f(-3.0)]],
            vec![diag(5.0, 5.0), diag(0.5, 0.5), diag(0.5, 0.5)],
            OutlierModel::UniformBox { margin: f(1.5) },
            50,
        ),
        Preset::Table1Ellipsoidal => MixtureSpec::from_counts(
            vec![200, 200],
            vec![vec![f(0.0), f(5.0)], vec![f(0.0), f(-5.0)]],
            vec![diag(20.0, 1.0), diag(20.0, 1.0)],
            OutlierModel::UniformBox { margin: f(1.5) },
            25,
        ),
        Preset::Fig1 => MixtureSpec::from_counts(
            vec![150, 150],
            vec![vec![f(-5.0), f(0.0)], vec![f(5.0), f(0.0)]],
            vec![diag(1.0, 1.0), diag(1.0, 1.0)],
            OutlierModel::AxisSegment { axis: 1, lo: f(-10.0), hi: f(10.0) },
            5,
        ),
        Preset::Simplex => {
            let r = 15;
            let means: Vec<Vec<T>> = (0..r)
                .map(|k| {
                    let mut mu = vec![T::zero(); r];
                    mu[k] = f(5.0);
                    mu
                })
                .collect();
            MixtureSpec::from_counts(
                vec![400; r],
                means,
                vec![Mat::identity(r); r],
                OutlierModel::GaussianOrigin { sigma: f(10.0) },
                400,
            )
        }
        Preset::WeakSep => weak_separation_spec(f(5.0), f(2.0), 6, 100),
    }
    .expect("preset specs are valid")
}

/// Generate a preset dataset.
pub fn gen_preset<T: Scalar>(preset: Preset, seed: u64) -> SyntheticDataset<T> {
    gen_gmm(&preset_spec::<T>(preset), seed).expect("preset generation is infallible")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_limit_sits_on_means() {
        let eps = 1e-12f64;
        let mut cov = Mat::zeros(2, 2);
        cov[(0, 0)] = eps;
        cov[(1, 1)] = eps;
        let spec = MixtureSpec::from_counts(
            vec![5, 5],
            vec![vec![1.0, 2.0], vec![-3.0, 4.0]],
            vec![cov.clone(), cov],
            OutlierModel::None,
            0,
        )
        .unwrap();
        let ds = gen_gmm(&spec, 3).unwrap();
        for (i, lab) in ds.true_labels.iter().enumerate() {
            let mu = &spec.means()[lab.cluster_id().unwrap() - 1];
            for c in 0..2 {
                assert!((ds.data.points()[(i, c)] - mu[c]).abs() < 1e-5f64);
            }
        }
    }

    #[test]
    fn cluster_counts_exact() {
        let ds = gen_preset::<f64>(Preset::Table1Balanced, 7);
        assert_eq!(ds.data.n(), 500);
        assert_eq!(ds.data.dim(), 2);
        let mut counts = [0usize; 3];
        let mut outliers = 0;
        for l in &ds.true_labels {
            match l {
                Label::Cluster(k) => counts[k - 1] += 1,
                Label::Outlier => outliers += 1,
                Label::Unlabeled => unreachable!(),
            }
        }
        assert_eq!(counts, [150, 150, 150]);
        assert_eq!(outliers, 50);
    }

    #[test]
    fn sample_means_near_truth() {
        // 3 sigma / sqrt(n_k) per coordinate
        let spec = preset_spec::<f64>(Preset::Table1Balanced);
        let ds = gen_gmm(&spec, 11).unwrap();
        for k in 0..3 {
            let mut sum = [0.0f64; 2];
            let mut cnt = 0;
            for (i, l) in ds.true_labels.iter().enumerate() {
                if l.cluster_id() == Some(k + 1) {
                    sum[0] += ds.data.points()[(i, 0)];
                    sum[1] += ds.data.points()[(i, 1)];
                    cnt += 1;
                }
            }
            let bound = 3.0 / (cnt as f64).sqrt();
            for c in 0..2 {
                let err = (sum[c] / cnt as f64 - spec.means()[k][c]).abs();
                assert!(err < bound, "cluster {k} coord {c}: err {err} bound {bound}");
            }
        }
    }

    #[test]
    fn deterministic_bit_for_bit() {
        let spec = preset_spec::<f64>(Preset::Table1Ellipsoidal);
        let a = gen_gmm(&spec, 21).unwrap();
        let b = gen_gmm(&spec, 21).unwrap();
        assert_eq!(a.data.points().data(), b.data.points().data());
        assert_eq!(a.true_labels, b.true_labels);
        let c = gen_gmm(&spec, 22).unwrap();
        assert_ne!(a.data.points().data(), c.data.points().data());
    }

    #[test]
    fn shuffle_permutes_labels_in_lockstep() {
        let spec = preset_spec::<f64>(Preset::Fig1);
        let ordered = gen_gmm_with(&spec, 5, false).unwrap();
        let shuffled = gen_gmm_with(&spec, 5, true).unwrap();
        // ordered: grouped by cluster then outliers appended
        assert!(ordered.true_labels[..150].iter().all(|l| *l == Label::Cluster(1)));
        assert!(ordered.true_labels[150..300].iter().all(|l| *l == Label::Cluster(2)));
        assert!(ordered.true_labels[300..].iter().all(|l| *l == Label::Outlier));
        // shuffled: same multiset of (row, label) pairs
        let key = |dsr: &[f64], l: Label| (format!("{dsr:?}"), l);
        let mut a: Vec<_> = (0..305)
            .map(|i| key(ordered.data.row(i), ordered.true_labels[i]))
            .collect();
        let mut b: Vec<_> = (0..305)
            .map(|i| key(shuffled.data.row(i), shuffled.true_labels[i]))
            .collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_outliers_respect_box() {
        let bounds = vec![(-2.0, 3.0), (10.0, 11.0)];
        let m = gen_uniform_outliers(&bounds, 500, 9).unwrap();
        for i in 0..500 {
            assert!(m[(i, 0)] >= -2.0 && m[(i, 0)] < 3.0);
            assert!(m[(i, 1)] >= 10.0 && m[(i, 1)] < 11.0);
        }
        // moment check: mean within 3 * width/sqrt(12 m) of center
        for (c, (lo, hi)) in bounds.iter().enumerate() {
            let mean: f64 = (0..500).map(|i| m[(i, c)]).sum::<f64>() / 500.0;
            let center = (lo + hi) / 2.0;
            let tol = 3.0 * (hi - lo) / (12.0f64 * 500.0).sqrt();
            assert!((mean - center).abs() < tol);
        }
        assert_eq!(gen_uniform_outliers(&bounds, 0, 1).unwrap().rows(), 0);
        assert!(gen_uniform_outliers(&[(1.0, 1.0)], 3, 1).is_err());
    }

    #[test]
    fn simplex_separation_is_sqrt2_s() {
        let ds = gen_simplex(2, 5.0, 10, 0, 10.0, None, 1).unwrap();
        let delta = ds.spec.delta_min().unwrap();
        assert!((delta - 5.0 * 2.0f64.sqrt()).abs() < 1e-12);
        // spec-derived delta matches direct pairwise computation
        let mu = ds.spec.means();
        let direct: f64 = (0..2).map(|c| (mu[0][c] - mu[1][c]).powi(2)).sum::<f64>().sqrt();
        assert!((delta - direct).abs() < 1e-12);
    }

    #[test]
    fn simplex_default_size() {
        let ds = gen_preset::<f64>(Preset::Simplex, 0);
        assert_eq!(ds.data.n(), 15 * 400 + 400);
        assert_eq!(ds.data.dim(), 15);
    }

    #[test]
    fn weak_separation_distances() {
        // delta12 == base_sep leaves the polygon untouched
        let spec = weak_separation_spec::<f64>(5.0, 5.0, 6, 10).unwrap();
        let mu = spec.means();
        for k in 0..6 {
            let l = (k + 1) % 6;
            let d: f64 = (0..2).map(|c| (mu[k][c] - mu[l][c]).powi(2)).sum::<f64>().sqrt();
            assert!((d - 5.0).abs() < 1e-9, "adjacent pair {k},{l}: {d}");
        }
        // pulled mean lands at the requested distance
        let pulled = weak_separation_spec::<f64>(5.0, 1.5, 6, 10).unwrap();
        let mu = pulled.means();
        let d12: f64 = (0..2).map(|c| (mu[0][c] - mu[1][c]).powi(2)).sum::<f64>().sqrt();
        assert!((d12 - 1.5).abs() < 1e-12);
        assert!(gen_weak_separation::<f64>(5.0, 6.0, 6, 10, 1).is_err());
    }

    #[test]
    fn preset_row_counts() {
        assert_eq!(gen_preset::<f64>(Preset::Fig1, 1).data.n(), 305);
        assert_eq!(gen_preset::<f64>(Preset::Table1Unbalanced, 1).data.n(), 850);
        assert_eq!(gen_preset::<f64>(Preset::Table1Ellipsoidal, 1).data.n(), 425);
        assert_eq!(gen_preset::<f64>(Preset::WeakSep, 1).data.n(), 600);
    }

    #[test]
    fn preset_parse_roundtrip() {
        for p in [
            Preset::Table1Balanced,
            Preset::Table1Unbalanced,
            Preset::Table1Ellipsoidal,
            Preset::Fig1,
            Preset::Simplex,
            Preset::WeakSep,
        ] {
            assert_eq!(Preset::parse(p.name()).unwrap(), p);
        }
        assert!(Preset::parse("nope").is_err());
    }
}
