//! End-to-end robust clustering: optional projection, parameter selection,
//! denoising, spectral rounding, and the degree-based outlier split, behind
//! one configuration surface.

use std::time::Instant;

use crate::denoise::{self, AdmmConfig, SolveDiagnostics};
use crate::dimred::{self, SplitProjection};
use crate::error::{Error, Result};
use crate::kernel::{self, ParamConfig};
use crate::linalg;
use crate::mat::Mat;
use crate::metrics;
use crate::modelselect::{self, EigengapReport};
use crate::outlier::{self, OutlierConfig};
use crate::rng::derive_seed;
use crate::scalar::Scalar;
use crate::spectral::{self, KMeansConfig};
use crate::synth::SyntheticDataset;
use crate::types::{ClusterResult, DataMatrix, DenoiseMethod, DenoisedMatrix, Label};

/// Known cluster count, or estimate it from the eigengap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterCount {
    Fixed(usize),
    Auto { max_r: usize },
}

/// Sample-splitting behavior of the projection stage.
#[derive(Debug, Clone)]
pub struct DimredConfig {
    pub enabled: bool,
    /// `N_2 = ceil(N^alpha)` in strict mode.
    pub alpha_split: f64,
    /// Strict mode fits the basis on a held-out part and leaves those points
    /// unlabeled; practical mode fits on everything.
    pub strict: bool,
    /// In strict mode, optionally assign held-out points to the nearest
    /// recovered centroid instead of reporting them unlabeled.
    pub assign_held_out: bool,
}

impl Default for DimredConfig {
    fn default() -> Self {
        DimredConfig { enabled: false, alpha_split: 0.5, strict: false, assign_held_out: false }
    }
}

/// Full pipeline configuration.
#[derive(Debug, Clone)]
pub struct PipelineConfig<T> {
    pub r: ClusterCount,
    pub method: DenoiseMethod,
    pub params: ParamConfig<T>,
    pub kmeans: KMeansConfig<T>,
    pub outliers: OutlierConfig<T>,
    pub dimred: DimredConfig,
    pub admm: AdmmConfig<T>,
    /// Quantile for the model-selection degree filter.
    pub beta_tilde: T,
    pub seed: u64,
    /// Re-run the spectral step on estimated inliers only (second pass).
    pub refine: bool,
}

impl<T: Scalar> PipelineConfig<T> {
    pub fn new(r: ClusterCount, method: DenoiseMethod) -> Self {
        PipelineConfig {
            r,
            method,
            params: ParamConfig::default(),
            kmeans: KMeansConfig::default(),
            outliers: OutlierConfig {
                // the rounded solution benefits from extending the knee; the
                // softer PSD solution does not
                knee_extension: method == DenoiseMethod::Lp,
                ..OutlierConfig::default()
            },
            dimred: DimredConfig::default(),
            admm: AdmmConfig::default(),
            beta_tilde: T::from_f64_lossy(0.8),
            seed: 0,
            refine: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.kmeans.validate()?;
        self.outliers.validate()?;
        self.admm.validate()?;
        match self.r {
            ClusterCount::Fixed(r) if r == 0 => Err(Error::parameter("r must be at least 1")),
            ClusterCount::Auto { max_r } if max_r == 0 => {
                Err(Error::parameter("auto mode needs max_r >= 1"))
            }
            ClusterCount::Auto { .. } if self.dimred.enabled => Err(Error::parameter(
                "projection needs a fixed cluster count; auto r with dimred is not supported",
            )),
            _ => Ok(()),
        }
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput<T> {
    pub result: ClusterResult<T>,
    pub eigengap: Option<EigengapReport<T>>,
    pub sdp_diagnostics: Option<SolveDiagnostics<T>>,
    pub projection: Option<SplitProjection<T>>,
    pub theta: T,
    pub gamma: T,
    /// Row sums of the denoised matrix, in input row order (held-out rows
    /// carry zero).
    pub degrees: Vec<T>,
    /// Wall-clock per stage, milliseconds.
    pub stage_ms: Vec<(&'static str, f64)>,
}

/// Data sizes above which the rounded solution is built bit-packed straight
/// from the data and eigenvectors come from the iterative path.
const STREAMING_THRESHOLD: usize = linalg::ITERATIVE_THRESHOLD;

/// Run the full pipeline.
pub fn run<T: Scalar>(y: &DataMatrix<T>, cfg: &PipelineConfig<T>) -> Result<RunOutput<T>> {
    cfg.validate()?;
    let n = y.n();
    let r_floor = match cfg.r {
        ClusterCount::Fixed(r) => r,
        ClusterCount::Auto { .. } => 1,
    };
    if n < r_floor {
        return Err(Error::input(format!("{n} points cannot form {r_floor} clusters")));
    }

    // content-based canonical order makes every downstream stage independent
    // of input row order; results are mapped back at the end
    let canon = canonical_order(y);
    let yc = y.select_rows(&canon);
    let mut out = run_canonical(&yc, cfg)?;

    let mut labels = vec![Label::Unlabeled; n];
    let mut spectral = vec![0usize; n];
    for (pos, &orig) in canon.iter().enumerate() {
        labels[orig] = out.result.labels[pos];
        spectral[orig] = out.result.spectral_labels[pos];
    }
    // embedding rows map back too
    let k = out.result.embedding.cols();
    let mut embedding = Mat::zeros(n, k);
    for (pos, &orig) in canon.iter().enumerate() {
        for j in 0..k {
            embedding[(orig, j)] = out.result.embedding[(pos, j)];
        }
    }
    out.result.labels = labels;
    out.result.spectral_labels = spectral;
    out.result.embedding = embedding;
    let mut degrees = vec![T::zero(); n];
    for (pos, &orig) in canon.iter().enumerate() {
        degrees[orig] = out.degrees[pos];
    }
    out.degrees = degrees;
    Ok(out)
}

fn all_rows_equal<T: Scalar>(y: &DataMatrix<T>) -> bool {
    let first = y.row(0);
    (1..y.n()).all(|i| y.row(i) == first)
}

fn canonical_order<T: Scalar>(y: &DataMatrix<T>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..y.n()).collect();
    idx.sort_by(|&a, &b| {
        let (ra, rb) = (y.row(a), y.row(b));
        for c in 0..ra.len() {
            match ra[c].partial_cmp(&rb[c]).expect("finite data") {
                std::cmp::Ordering::Equal => continue,
                o => return o,
            }
        }
        std::cmp::Ordering::Equal
    });
    idx
}

fn run_canonical<T: Scalar>(y: &DataMatrix<T>, cfg: &PipelineConfig<T>) -> Result<RunOutput<T>> {
    let mut stage_ms: Vec<(&'static str, f64)> = Vec::new();
    let mut clock = Instant::now();
    let mut tick = |tag: &'static str, clock: &mut Instant| {
        stage_ms.push((tag, clock.elapsed().as_secs_f64() * 1e3));
        *clock = Instant::now();
    };

    // (a) projection
    let r_hint = match cfg.r {
        ClusterCount::Fixed(r) => r,
        ClusterCount::Auto { max_r } => max_r,
    };
    let mut projection: Option<SplitProjection<T>> = None;
    let work: DataMatrix<T>;
    let mut held_out: Vec<usize> = Vec::new();
    let mut work_to_orig: Vec<usize> = (0..y.n()).collect();
    if cfg.dimred.enabled && y.dim() > r_hint.saturating_sub(1) && r_hint >= 2 {
        let proj = if cfg.dimred.strict {
            dimred::fit_projection(y, r_hint, cfg.dimred.alpha_split, derive_seed(cfg.seed, "dimred"))
                .map_err(|e| e.in_stage("dimred"))?
        } else {
            dimred::fit_projection_all(y, r_hint).map_err(|e| e.in_stage("dimred"))?
        };
        let (reduced, map) = dimred::project(y, &proj).map_err(|e| e.in_stage("dimred"))?;
        held_out = proj.p2_indices.clone();
        work_to_orig = map;
        work = reduced;
        projection = Some(proj);
    } else {
        work = y.clone();
    }
    tick("dimred", &mut clock);

    // (b) parameter selection in the working (possibly reduced) space
    let gamma = match cfg.params.gamma_override {
        Some(g) => g,
        None => kernel::select_gamma(work.dim(), cfg.params.alpha)
            .map_err(|e| e.in_stage("select_gamma"))?,
    };
    let select_theta_for = |hint: usize| -> Result<T> {
        let params = ParamConfig { r_hint: Some(hint), ..cfg.params.clone() };
        match kernel::select_theta(&work, &params) {
            // coincident points leave any positive scale equivalent (the
            // kernel is all-ones either way); keep the run alive instead of
            // failing on trivially degenerate data
            Err(Error::Input(_)) if work.n() >= 2 && all_rows_equal(&work) => Ok(T::one()),
            other => other.map_err(|e| e.in_stage("select_theta")),
        }
    };
    let mut theta = select_theta_for(r_hint)?;
    tick("params", &mut clock);

    let denoise_at = |theta: T| -> Result<(DenoisedMatrix<T>, Option<SolveDiagnostics<T>>)> {
        match cfg.method {
            DenoiseMethod::Lp => {
                if work.n() > STREAMING_THRESHOLD {
                    Ok((
                        denoise::lp_denoise_streaming(&work, theta, gamma)
                            .map_err(|e| e.in_stage("denoise"))?,
                        None,
                    ))
                } else {
                    let k =
                        kernel::gaussian_kernel(&work, theta).map_err(|e| e.in_stage("kernel"))?;
                    Ok((denoise::lp_denoise(&k, gamma).map_err(|e| e.in_stage("denoise"))?, None))
                }
            }
            DenoiseMethod::Sdp => {
                let k = kernel::gaussian_kernel(&work, theta).map_err(|e| e.in_stage("kernel"))?;
                let (x, diags) =
                    denoise::sdp_denoise(&k, gamma, &cfg.admm).map_err(|e| e.in_stage("denoise"))?;
                Ok((x, Some(diags)))
            }
        }
    };

    // (c) denoise; (d) cluster count. The scale selection depends on the
    // cluster-count hint, so auto mode runs a pilot pass at max_r to read the
    // eigengap, then re-selects the scale at the estimate and denoises again.
    let (x, mut sdp_diagnostics) = denoise_at(theta)?;
    tick("denoise", &mut clock);
    let mut eigengap = None;
    let mut x = x;
    let r = match cfg.r {
        ClusterCount::Fixed(r) => r,
        ClusterCount::Auto { max_r } => {
            let rep = modelselect::estimate_r(&x, cfg.beta_tilde, max_r)
                .map_err(|e| e.in_stage("modelselect"))?;
            let r_hat = rep.r_hat;
            eigengap = Some(rep);
            if r_hat != r_hint {
                theta = select_theta_for(r_hat)?;
                let (x2, diags2) = denoise_at(theta)?;
                x = x2;
                sdp_diagnostics = diags2;
            }
            r_hat
        }
    };
    if work.n() < r {
        return Err(Error::input(format!("{} points cannot form {r} clusters", work.n())));
    }
    tick("modelselect", &mut clock);

    // (e) spectral rounding
    let kmeans_cfg = cfg.kmeans.clone().with_seed(derive_seed(cfg.seed, "kmeans"));
    let embedding = spectral::embed(&x, r).map_err(|e| e.in_stage("embed"))?;
    let (mut spectral_labels, mut cost) =
        spectral::kmeans(&embedding, r, &kmeans_cfg).map_err(|e| e.in_stage("kmeans"))?;
    tick("spectral", &mut clock);

    // (f) outlier split
    let work_degrees = outlier::degrees(&x);
    let split = outlier::split_from_degrees(&work_degrees, &cfg.outliers)
        .map_err(|e| e.in_stage("outliers"))?;
    tick("outliers", &mut clock);

    if cfg.refine && !split.outliers.is_empty() {
        // second pass on the estimated inliers only
        let sub = x.submatrix(&split.inliers);
        let xin = DenoisedMatrix::from_dense(sub, gamma, cfg.method);
        let emb_in = spectral::embed(&xin, r).map_err(|e| e.in_stage("refine"))?;
        let refine_cfg = cfg.kmeans.clone().with_seed(derive_seed(cfg.seed, "kmeans-refine"));
        let (labels_in, cost_in) =
            spectral::kmeans(&emb_in, r, &refine_cfg).map_err(|e| e.in_stage("refine"))?;
        for (pos, &i) in split.inliers.iter().enumerate() {
            spectral_labels[i] = labels_in[pos];
        }
        cost = cost_in;
        tick("refine", &mut clock);
    }

    // assemble labels in original (canonical) indexing
    let n = y.n();
    let mut labels = vec![Label::Unlabeled; n];
    for (work_idx, &orig) in work_to_orig.iter().enumerate() {
        labels[orig] = Label::Cluster(spectral_labels[work_idx]);
    }
    for &work_idx in &split.outliers {
        labels[work_to_orig[work_idx]] = Label::Outlier;
    }
    let mut full_spectral = vec![0usize; n];
    for (work_idx, &orig) in work_to_orig.iter().enumerate() {
        full_spectral[orig] = spectral_labels[work_idx];
    }

    if cfg.dimred.assign_held_out && !held_out.is_empty() {
        let proj = projection.as_ref().expect("held-out points imply a projection");
        assign_held_out(y, proj, &held_out, &embedding_centroids(&embedding, &spectral_labels, r), &mut labels, &mut full_spectral)?;
    }

    // spread embedding rows back over original indices (held-out rows zero)
    let k = embedding.cols();
    let mut emb_full = Mat::zeros(n, k);
    for (work_idx, &orig) in work_to_orig.iter().enumerate() {
        for j in 0..k {
            emb_full[(orig, j)] = embedding[(work_idx, j)];
        }
    }

    let mut degrees = vec![T::zero(); n];
    for (work_idx, &orig) in work_to_orig.iter().enumerate() {
        degrees[orig] = work_degrees[work_idx];
    }
    Ok(RunOutput {
        result: ClusterResult {
            labels,
            r,
            embedding: emb_full,
            kmeans_cost: cost,
            degree_threshold: split.tau,
            spectral_labels: full_spectral,
        },
        eigengap,
        sdp_diagnostics,
        projection,
        theta,
        gamma,
        degrees,
        stage_ms,
    })
}

/// Centroids of the working-space embedding per label (1-based labels).
fn embedding_centroids<T: Scalar>(embedding: &Mat<T>, labels: &[usize], r: usize) -> Vec<Vec<T>> {
    let k = embedding.cols();
    let mut sums = vec![vec![T::zero(); k]; r];
    let mut counts = vec![0usize; r];
    for (i, &l) in labels.iter().enumerate() {
        counts[l - 1] += 1;
        for j in 0..k {
            sums[l - 1][j] += embedding[(i, j)];
        }
    }
    for (s, &c) in sums.iter_mut().zip(counts.iter()) {
        if c > 0 {
            for v in s.iter_mut() {
                *v /= T::from_usize_lossy(c);
            }
        }
    }
    sums
}

/// Held-out points cannot be placed in the embedding (they were never part of
/// the denoised matrix), so this nearest-centroid pass is necessarily
/// approximate: it works in the reduced data space against per-cluster mean
/// positions of the labeled points.
fn assign_held_out<T: Scalar>(
    y: &DataMatrix<T>,
    proj: &SplitProjection<T>,
    held_out: &[usize],
    _embedding_centroids: &[Vec<T>],
    labels: &mut [Label],
    spectral: &mut [usize],
) -> Result<()> {
    // reduced-space centroids of labeled points
    let k = proj.basis.cols();
    let mut sums: Vec<Vec<T>> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for &i in &proj.p1_indices {
        if let Label::Cluster(c) = labels[i] {
            if c > sums.len() {
                sums.resize(c, vec![T::zero(); k]);
                counts.resize(c, 0);
            }
            let red = proj.basis.transpose_apply(y.row(i));
            for j in 0..k {
                sums[c - 1][j] += red[j];
            }
            counts[c - 1] += 1;
        }
    }
    for (s, &c) in sums.iter_mut().zip(counts.iter()) {
        if c > 0 {
            for v in s.iter_mut() {
                *v /= T::from_usize_lossy(c);
            }
        }
    }
    for &i in held_out {
        let red = proj.basis.transpose_apply(y.row(i));
        let mut best = T::infinity();
        let mut arg = 0usize;
        for (c, centroid) in sums.iter().enumerate() {
            if counts[c] == 0 {
                continue;
            }
            let mut dist = T::zero();
            for j in 0..k {
                let t = red[j] - centroid[j];
                dist += t * t;
            }
            if dist < best {
                best = dist;
                arg = c + 1;
            }
        }
        if arg > 0 {
            labels[i] = Label::Cluster(arg);
            spectral[i] = arg;
        }
    }
    Ok(())
}

/// k-means++ on the raw data rows, as a baseline. Labels are 1-based; no
/// outlier detection.
pub fn kmeans_baseline<T: Scalar>(
    y: &DataMatrix<T>,
    r: usize,
    cfg: &KMeansConfig<T>,
) -> Result<Vec<Label>> {
    let (ids, _) = spectral::kmeans(y.points(), r, cfg)?;
    Ok(ids.into_iter().map(Label::Cluster).collect())
}

/// Vanilla spectral clustering baseline: k-means on the rows of the top-r
/// eigenvectors of the degree-normalized kernel `D^{-1/2} K D^{-1/2}`, with
/// the kernel scale chosen by the plain quantile formula (no cluster-count
/// correction). This is the standard normalized variant the robust pipeline
/// is compared against.
pub fn vanilla_sc_baseline<T: Scalar>(
    y: &DataMatrix<T>,
    r: usize,
    cfg: &KMeansConfig<T>,
) -> Result<Vec<Label>> {
    let params = ParamConfig::<T>::default(); // no r_hint: literal scale
    let theta = kernel::select_theta(y, &params)?;
    let k = kernel::gaussian_kernel(y, theta)?;
    let n = y.n();
    let mut deg = vec![T::zero(); n];
    for i in 0..n {
        for j in 0..n {
            deg[i] += k.get(i, j);
        }
    }
    let mut normalized = k.matrix().clone();
    for i in 0..n {
        for j in 0..n {
            let denom = (deg[i] * deg[j]).sqrt();
            normalized[(i, j)] = normalized[(i, j)] / denom;
        }
    }
    normalized.symmetrize();
    let (_, vecs) = linalg::sym_eigendecompose(&normalized, r)?;
    let (ids, _) = spectral::kmeans(&vecs, r, cfg)?;
    Ok(ids.into_iter().map(Label::Cluster).collect())
}

/// Score a run against a synthetic dataset's ground truth.
pub fn evaluate_run<T: Scalar>(
    output: &RunOutput<T>,
    dataset: &SyntheticDataset<T>,
) -> Result<metrics::EvalReport> {
    metrics::evaluate(&output.result.labels, &dataset.true_labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gen_preset, Preset};

    #[test]
    fn fig1_recovers_clusters() {
        let ds = gen_preset::<f64>(Preset::Fig1, 0);
        let cfg = PipelineConfig::new(ClusterCount::Fixed(2), DenoiseMethod::Lp).with_seed(1);
        let out = run(&ds.data, &cfg).unwrap();
        let rep = evaluate_run(&out, &ds).unwrap();
        assert!(rep.inlier_accuracy >= 0.99, "inlier accuracy {}", rep.inlier_accuracy);
    }

    #[test]
    fn auto_r_on_two_far_clusters() {
        // m=0, two far groups: auto must find r=2 and label exactly
        let spec = crate::types::MixtureSpec::from_counts(
            vec![40, 40],
            vec![vec![0.0, 0.0], vec![30.0, 0.0]],
            vec![Mat::identity(2), Mat::identity(2)],
            crate::types::OutlierModel::None,
            0,
        )
        .unwrap();
        let ds = crate::synth::gen_gmm(&spec, 3).unwrap();
        let cfg =
            PipelineConfig::new(ClusterCount::Auto { max_r: 8 }, DenoiseMethod::Lp).with_seed(2);
        let out = run(&ds.data, &cfg).unwrap();
        assert_eq!(out.result.r, 2);
        let rep = evaluate_run(&out, &ds).unwrap();
        assert_eq!(rep.overall_accuracy, 1.0);
        assert_eq!(out.eigengap.as_ref().unwrap().r_hat, 2);
    }

    #[test]
    fn permutation_equivariance_exact() {
        let ds = gen_preset::<f64>(Preset::Fig1, 4);
        let cfg = PipelineConfig::new(ClusterCount::Fixed(2), DenoiseMethod::Lp).with_seed(9);
        let base = run(&ds.data, &cfg).unwrap();
        // reverse the rows
        let n = ds.data.n();
        let perm: Vec<usize> = (0..n).rev().collect();
        let permuted = ds.data.select_rows(&perm);
        let out = run(&permuted, &cfg).unwrap();
        for i in 0..n {
            assert_eq!(out.result.labels[i], base.result.labels[perm[i]], "row {i}");
        }
    }

    #[test]
    fn stage_errors_are_tagged() {
        // mostly-coincident points zero out the neighbor-distance quantiles
        let mut rows = vec![vec![1.0, 1.0]; 9];
        rows.push(vec![2.0, 2.0]);
        let y = DataMatrix::from_rows(rows).unwrap();
        let cfg = PipelineConfig::new(ClusterCount::Fixed(2), DenoiseMethod::Lp);
        match run(&y, &cfg) {
            Err(Error::Stage { stage, .. }) => assert_eq!(stage, "select_theta"),
            other => panic!("expected stage error, got {other:?}"),
        }
    }

    #[test]
    fn coincident_points_cluster_trivially() {
        let y = DataMatrix::from_rows(vec![vec![0.0, 0.0]; 2]).unwrap();
        let cfg = PipelineConfig::new(ClusterCount::Fixed(1), DenoiseMethod::Lp);
        let out = run(&y, &cfg).unwrap();
        assert!(out.result.labels.iter().all(|l| *l == Label::Cluster(1)));
    }

    #[test]
    fn config_validation_rejects_auto_with_dimred() {
        let mut cfg = PipelineConfig::<f64>::new(ClusterCount::Auto { max_r: 5 }, DenoiseMethod::Lp);
        cfg.dimred.enabled = true;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn strict_dimred_leaves_held_out_unlabeled() {
        let ds = crate::synth::gen_simplex(3, 8.0, 60, 0, 10.0, Some(12), 5).unwrap();
        let mut cfg = PipelineConfig::new(ClusterCount::Fixed(3), DenoiseMethod::Lp).with_seed(3);
        cfg.dimred.enabled = true;
        cfg.dimred.strict = true;
        let out = run(&ds.data, &cfg).unwrap();
        let held = out.projection.as_ref().unwrap().p2_indices.len();
        assert!(held > 0);
        let unlabeled = out.result.labels.iter().filter(|l| **l == Label::Unlabeled).count();
        assert_eq!(unlabeled, held);
    }
}
