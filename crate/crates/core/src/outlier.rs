//! Degree-based outlier detection on the denoised matrix.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stats::quantile_sorted;
use crate::types::DenoisedMatrix;

/// Threshold selection mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutlierMode {
    /// Detect a low-degree knee in the (log) degree distribution; yields an
    /// empty outlier set when the distribution shows no split.
    Knee,
    /// Flag everything below the `quantile_level` degree quantile.
    Quantile,
    /// Fixed threshold.
    Absolute,
}

#[derive(Debug, Clone)]
pub struct OutlierConfig<T> {
    pub mode: OutlierMode,
    /// Largest fraction of points the knee may flag, and the level used by
    /// quantile mode (default 0.2, the complement of the 0.8 degree-filter
    /// quantile used for model selection).
    pub quantile_level: T,
    /// Threshold for absolute mode.
    pub absolute_tau: Option<T>,
    /// After a knee fires and the flagged share is substantial, extend the
    /// threshold to the lower edge of the surviving degree mode. Helps when
    /// rounded degrees leave stragglers between the outlier sprawl and the
    /// inlier mode; counterproductive on the tighter degree profiles the PSD
    /// solver produces, so the pipeline disables it there.
    pub knee_extension: bool,
}

impl<T: Scalar> Default for OutlierConfig<T> {
    fn default() -> Self {
        OutlierConfig {
            mode: OutlierMode::Knee,
            quantile_level: T::from_f64_lossy(0.2),
            absolute_tau: None,
            knee_extension: true,
        }
    }
}

impl<T: Scalar> OutlierConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.quantile_level > T::zero() && self.quantile_level < T::one()) {
            return Err(Error::parameter("quantile_level must lie in (0,1)"));
        }
        match self.mode {
            OutlierMode::Absolute => match self.absolute_tau {
                Some(t) if t >= T::zero() => Ok(()),
                Some(_) => Err(Error::parameter("absolute_tau must be nonnegative")),
                None => Err(Error::parameter("absolute mode needs absolute_tau")),
            },
            _ => Ok(()),
        }
    }
}

/// Outcome of the inlier/outlier split.
#[derive(Debug, Clone)]
pub struct OutlierSplit<T> {
    pub inliers: Vec<usize>,
    pub outliers: Vec<usize>,
    /// Threshold actually applied; `None` when no split fired.
    pub tau: Option<T>,
    /// Set when the requested mode could not separate anything (all degrees
    /// equal, or no significant knee).
    pub degenerate: bool,
}

/// Row sums of the denoised matrix, diagonal included.
pub fn degrees<T: Scalar>(x: &DenoisedMatrix<T>) -> Vec<T> {
    x.as_sym_op().row_sums()
}

/// Split points into estimated inliers (degree >= tau) and outliers.
pub fn split_outliers<T: Scalar>(
    x: &DenoisedMatrix<T>,
    cfg: &OutlierConfig<T>,
) -> Result<OutlierSplit<T>> {
    cfg.validate()?;
    let deg = degrees(x);
    split_from_degrees(&deg, cfg)
}

/// Same split, computed from an already-available degree vector.
pub fn split_from_degrees<T: Scalar>(deg: &[T], cfg: &OutlierConfig<T>) -> Result<OutlierSplit<T>> {
    cfg.validate()?;
    let n = deg.len();
    let tau = match cfg.mode {
        OutlierMode::Absolute => Some(cfg.absolute_tau.expect("validated")),
        OutlierMode::Quantile => {
            let mut sorted = deg.to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite degrees"));
            if sorted[0] == sorted[n - 1] {
                None // all degrees equal: nothing to separate
            } else {
                Some(quantile_sorted(&sorted, cfg.quantile_level.to_f64_lossy()))
            }
        }
        OutlierMode::Knee => knee_threshold(deg, cfg),
    };
    let split = match tau {
        Some(t) => {
            let (mut inl, mut out) = (Vec::new(), Vec::new());
            for (i, &d) in deg.iter().enumerate() {
                if d >= t {
                    inl.push(i);
                } else {
                    out.push(i);
                }
            }
            OutlierSplit { inliers: inl, outliers: out, tau: Some(t), degenerate: false }
        }
        None => OutlierSplit {
            inliers: (0..n).collect(),
            outliers: Vec::new(),
            tau: None,
            degenerate: true,
        },
    };
    Ok(split)
}

/// Knee detection on log-degrees.
///
/// A capped two-class variance split (the flagged class holds at most
/// `quantile_level` of the points) must explain enough of the variance, or
/// show a wide gap relative to the surviving mode's spread, before anything
/// is flagged; a clean degree profile therefore yields no outliers.
fn knee_threshold<T: Scalar>(deg: &[T], cfg: &OutlierConfig<T>) -> Option<T> {
    let n = deg.len();
    if n < 3 {
        return None;
    }
    let logs: Vec<f64> = {
        let mut v: Vec<f64> = deg.iter().map(|d| d.to_f64_lossy().max(0.0).ln_1p()).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let mean = logs.iter().sum::<f64>() / n as f64;
    let total_var = logs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    if total_var <= 1e-18 {
        return None;
    }
    let window = ((cfg.quantile_level.to_f64_lossy() * n as f64).floor() as usize).max(1);
    let mut csum = 0.0;
    let total: f64 = logs.iter().sum();
    let mut best = (0.0f64, usize::MAX);
    for (i, v) in logs.iter().enumerate().take(window) {
        csum += v;
        let n1 = (i + 1) as f64;
        let n2 = (n - i - 1) as f64;
        if n2 == 0.0 {
            break;
        }
        let m1 = csum / n1;
        let m2 = (total - csum) / n2;
        let w = (n1 / n as f64) * (n2 / n as f64) * (m2 - m1) * (m2 - m1);
        if w > best.0 {
            best = (w, i);
        }
    }
    if best.1 == usize::MAX {
        return None;
    }
    let i = best.1;
    let explained = best.0 / total_var;
    let right = &logs[i + 1..];
    let med = median_sorted(right);
    let madn = 1.4826 * {
        let mut devs: Vec<f64> = right.iter().map(|x| (x - med).abs()).collect();
        devs.sort_by(f64::total_cmp);
        median_sorted(&devs)
    } + 1e-12;
    let gap_ratio = (logs[i + 1] - logs[i]) / madn;
    // two-condition significance gate, calibrated so noise-free degree
    // profiles never fire
    let fired = explained >= 0.72 || (explained >= 0.55 && gap_ratio >= 2.0);
    if !fired {
        return None;
    }
    let mut tau = ((logs[i] + logs[i + 1]) / 2.0).exp_m1();
    let flagged_share = (i + 1) as f64 / n as f64;
    if cfg.knee_extension && flagged_share >= 0.05 {
        // extend toward the mode's lower edge; collateral capped by the
        // quantile_level budget
        let edge_q = if flagged_share >= 0.07 { 0.035 } else { 0.02 };
        let mut sorted: Vec<f64> = deg.iter().map(|d| d.to_f64_lossy()).collect();
        sorted.sort_by(f64::total_cmp);
        let right_deg = &sorted[i + 1..];
        let edge = quantile_sorted_f64(right_deg, edge_q);
        let cap = quantile_sorted_f64(&sorted, cfg.quantile_level.to_f64_lossy());
        tau = tau.max(edge).min(cap);
    }
    Some(T::from_f64_lossy(tau))
}

fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn quantile_sorted_f64(sorted: &[f64], p: f64) -> f64 {
    let m = sorted.len();
    if m == 1 {
        return sorted[0];
    }
    let t = p * (m - 1) as f64;
    let lo = t.floor() as usize;
    let hi = (lo + 1).min(m - 1);
    sorted[lo] + (t - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::Mat;
    use crate::types::DenoiseMethod;

    fn dense(x: Mat<f64>) -> DenoisedMatrix<f64> {
        DenoisedMatrix::from_dense(x, 0.5, DenoiseMethod::Lp)
    }

    #[test]
    fn degrees_of_all_ones() {
        let x = dense(Mat::from_vec(4, 4, vec![1.0; 16]).unwrap());
        assert_eq!(degrees(&x), vec![4.0; 4]);
    }

    #[test]
    fn zero_row_has_zero_degree() {
        let mut m = Mat::zeros(3, 3);
        m[(0, 0)] = 1.0;
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 1.0;
        m[(1, 1)] = 1.0;
        let deg = degrees(&dense(m));
        assert_eq!(deg, vec![2.0, 2.0, 0.0]);
    }

    #[test]
    fn degrees_match_scalar_loop() {
        let mut s = crate::rng::Stream::new(8);
        let mut m = Mat::zeros(7, 7);
        for i in 0..7 {
            for j in i..7 {
                let v: f64 = s.uniform(0.0, 1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        let deg = degrees(&dense(m.clone()));
        for i in 0..7 {
            let expect: f64 = (0..7).map(|j| m[(i, j)]).sum();
            assert!((deg[i] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn absolute_mode_flags_zero_rows() {
        // block of ones (5) plus zero rows (3)
        let mut m = Mat::zeros(8, 8);
        for i in 0..5 {
            for j in 0..5 {
                m[(i, j)] = 1.0;
            }
        }
        let cfg = OutlierConfig {
            mode: OutlierMode::Absolute,
            absolute_tau: Some(1.0),
            ..Default::default()
        };
        let split = split_outliers(&dense(m), &cfg).unwrap();
        assert_eq!(split.outliers, vec![5, 6, 7]);
        assert_eq!(split.inliers.len(), 5);
    }

    #[test]
    fn quantile_mode_hand_built() {
        // degrees (10,10,10,1,1): cut between the 1s and 10s
        let cfg = OutlierConfig {
            mode: OutlierMode::Quantile,
            quantile_level: 0.4,
            ..Default::default()
        };
        let split = split_from_degrees(&[10.0, 10.0, 10.0, 1.0, 1.0], &cfg).unwrap();
        assert_eq!(split.outliers, vec![3, 4]);
    }

    #[test]
    fn quantile_mode_all_equal_degenerates() {
        let cfg = OutlierConfig { mode: OutlierMode::Quantile, ..Default::default() };
        let split = split_from_degrees(&[3.0; 6], &cfg).unwrap();
        assert!(split.degenerate);
        assert!(split.outliers.is_empty());
        assert_eq!(split.inliers.len(), 6);
    }

    #[test]
    fn knee_flags_low_degree_tail() {
        // 40 points at degree ~40, 6 points at degree 1..3
        let mut deg = vec![40.0; 40];
        deg.extend([1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let split = split_from_degrees(&deg, &OutlierConfig::default()).unwrap();
        assert_eq!(split.outliers, (40..46).collect::<Vec<_>>());
    }

    #[test]
    fn knee_quiet_on_homogeneous_degrees() {
        // smooth unimodal degrees: no outliers should be invented
        let deg: Vec<f64> = (0..100).map(|i| 35.0 + 8.0 * ((i as f64) * 0.37).sin()).collect();
        let split = split_from_degrees(&deg, &OutlierConfig::default()).unwrap();
        assert!(split.outliers.is_empty(), "flagged {:?}", split.outliers);
    }

    #[test]
    fn degree_one_points_flagged_under_any_positive_split() {
        let mut deg = vec![30.0; 50];
        deg.push(1.0);
        deg.push(1.0);
        let split = split_from_degrees(&deg, &OutlierConfig::default()).unwrap();
        assert_eq!(split.outliers, vec![50, 51]);
        if let Some(tau) = split.tau {
            assert!(tau > 1.0);
        }
    }

    #[test]
    fn partition_is_exact() {
        let mut s = crate::rng::Stream::new(55);
        let deg: Vec<f64> = (0..30).map(|_| s.uniform(0.0, 50.0)).collect();
        for cfg in [
            OutlierConfig::default(),
            OutlierConfig { mode: OutlierMode::Quantile, ..Default::default() },
            OutlierConfig { mode: OutlierMode::Absolute, absolute_tau: Some(10.0), ..Default::default() },
        ] {
            let split = split_from_degrees(&deg, &cfg).unwrap();
            assert_eq!(split.inliers.len() + split.outliers.len(), 30);
            let mut all: Vec<usize> = split.inliers.iter().chain(&split.outliers).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..30).collect::<Vec<_>>());
        }
    }

    #[test]
    fn permutation_equivariant() {
        let deg = vec![20.0, 1.0, 22.0, 2.0, 25.0, 21.0, 23.0, 24.0, 26.0, 20.5];
        let split = split_from_degrees(&deg, &OutlierConfig::default()).unwrap();
        let mut perm_deg = deg.clone();
        perm_deg.reverse();
        let split_rev = split_from_degrees(&perm_deg, &OutlierConfig::default()).unwrap();
        let n = deg.len();
        let mapped: Vec<usize> = split.outliers.iter().map(|&i| n - 1 - i).collect();
        let mut mapped_sorted = mapped;
        mapped_sorted.sort_unstable();
        assert_eq!(mapped_sorted, split_rev.outliers);
    }

    #[test]
    fn config_validation() {
        let bad = OutlierConfig::<f64> { quantile_level: 1.5, ..Default::default() };
        assert!(bad.validate().is_err());
        let missing =
            OutlierConfig::<f64> { mode: OutlierMode::Absolute, absolute_tau: None, ..Default::default() };
        assert!(missing.validate().is_err());
    }
}
