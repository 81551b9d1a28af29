//! Gaussian kernel construction and data-driven selection of the kernel scale
//! and rounding offset.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::scalar::Scalar;
use crate::stats;
use crate::types::{DataMatrix, KernelMatrix};

/// Hyperparameter selection knobs.
#[derive(Debug, Clone)]
pub struct ParamConfig<T> {
    /// Quantile level over points (default 0.2).
    pub alpha: T,
    /// Neighbor quantile per point (default 0.06).
    pub beta: T,
    /// Expected cluster count. When present, the chi-squared level in the
    /// scale denominator follows the coverage rule `1 - exp(-2.2 beta r)`;
    /// without it the level stays at `1 - alpha`. See [`select_theta`].
    pub r_hint: Option<usize>,
    pub theta_override: Option<T>,
    pub gamma_override: Option<T>,
}

impl<T: Scalar> Default for ParamConfig<T> {
    fn default() -> Self {
        ParamConfig {
            alpha: T::from_f64_lossy(0.2),
            beta: T::from_f64_lossy(0.06),
            r_hint: None,
            theta_override: None,
            gamma_override: None,
        }
    }
}

impl<T: Scalar> ParamConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let in01 = |x: T| x > T::zero() && x < T::one();
        if !in01(self.alpha) {
            return Err(Error::parameter("alpha must lie in (0,1)"));
        }
        if !in01(self.beta) {
            return Err(Error::parameter("beta must lie in (0,1)"));
        }
        if let Some(t) = self.theta_override {
            if !(t > T::zero()) {
                return Err(Error::parameter("theta override must be positive"));
            }
        }
        if let Some(g) = self.gamma_override {
            if !in01(g) {
                return Err(Error::parameter("gamma override must lie in (0,1)"));
            }
        }
        Ok(())
    }

    pub fn with_r_hint(mut self, r: usize) -> Self {
        self.r_hint = Some(r);
        self
    }
}

/// Similarity matrix with `K_ij = exp(-|y_i - y_j|^2 / (2 theta^2))`.
///
/// Each unordered pair is evaluated once and mirrored, so the result is
/// exactly symmetric with a unit diagonal.
pub fn gaussian_kernel<T: Scalar>(y: &DataMatrix<T>, theta: T) -> Result<KernelMatrix<T>> {
    if !(theta > T::zero()) {
        return Err(Error::parameter("theta must be positive"));
    }
    let n = y.n();
    let denom = (T::one() + T::one()) * theta * theta;
    let mut rows: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![T::zero(); n];
            for j in (i + 1)..n {
                row[j] = (-y.points().row_dist_sq(i, j) / denom).exp();
            }
            row
        })
        .collect();
    let mut k = Mat::zeros(n, n);
    for i in 0..n {
        let src = std::mem::take(&mut rows[i]);
        k.row_mut(i).copy_from_slice(&src);
    }
    for i in 0..n {
        k[(i, i)] = T::one();
        for j in (i + 1)..n {
            k[(j, i)] = k[(i, j)];
        }
    }
    Ok(KernelMatrix::from_parts(k, theta))
}

/// Per-point neighbor-distance quantiles `q_i`: the beta quantile of the
/// distances from point `i` to every other point (the zero self-distance is
/// excluded).
pub fn neighbor_quantiles<T: Scalar>(y: &DataMatrix<T>, beta: T) -> Vec<T> {
    let n = y.n();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut dists: Vec<T> = (0..n)
                .filter(|&j| j != i)
                .map(|j| y.points().row_dist_sq(i, j).sqrt())
                .collect();
            dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
            stats::quantile_sorted(&dists, beta.to_f64_lossy())
        })
        .collect()
}

/// Kernel scale from the neighbor-distance profile:
///
/// `theta = (1-alpha) quantile of {q_1..q_N} / sqrt(chi2_quantile(level, d))`.
///
/// With `r_hint` set, `level = 1 - exp(-2.2 beta r)`, which converts the
/// beta-neighborhood distance scale into a per-cluster noise scale under
/// roughly balanced clusters (beta*N neighbors cover a `beta*r` fraction of
/// one cluster). It approaches the plain `1 - alpha` level as `beta*r` grows
/// past ~0.7 and equals it when no hint is given.
pub fn select_theta<T: Scalar>(y: &DataMatrix<T>, cfg: &ParamConfig<T>) -> Result<T> {
    cfg.validate()?;
    if let Some(t) = cfg.theta_override {
        return Ok(t);
    }
    if y.n() < 2 {
        return Err(Error::input("theta selection needs at least two points"));
    }
    let mut qs = neighbor_quantiles(y, cfg.beta);
    qs.sort_by(|a, b| a.partial_cmp(b).expect("finite quantiles"));
    let numerator = stats::quantile_sorted(&qs, 1.0 - cfg.alpha.to_f64_lossy());
    if !(numerator > T::zero()) {
        return Err(Error::input("all pairwise distances are zero"));
    }
    let level = denominator_level(cfg);
    let t = stats::chi2_quantile(y.dim(), level)?;
    Ok(numerator / T::from_f64_lossy(t.sqrt()))
}

fn denominator_level<T: Scalar>(cfg: &ParamConfig<T>) -> f64 {
    match cfg.r_hint {
        Some(r) => {
            let br = cfg.beta.to_f64_lossy() * r as f64;
            1.0 - (-2.2 * br).exp()
        }
        None => 1.0 - cfg.alpha.to_f64_lossy(),
    }
}

/// Rounding offset `gamma = exp(-t_alpha / 2)` with `t_alpha` the `(1-alpha)`
/// quantile of the chi-squared distribution with `d` degrees of freedom.
pub fn select_gamma<T: Scalar>(d: usize, alpha: T) -> Result<T> {
    if d == 0 {
        return Err(Error::parameter("dimension must be at least 1"));
    }
    let a = alpha.to_f64_lossy();
    if !(0.0 < a && a < 1.0) {
        return Err(Error::parameter("alpha must lie in (0,1)"));
    }
    let t = stats::chi2_quantile(d, 1.0 - a)?;
    Ok(T::from_f64_lossy((-t / 2.0).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(rows: Vec<Vec<f64>>) -> DataMatrix<f64> {
        DataMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn kernel_of_identical_points_is_all_ones() {
        let y = data(vec![vec![1.0, 2.0], vec![1.0, 2.0]]);
        let k = gaussian_kernel(&y, 0.7).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(k.get(i, j), 1.0);
            }
        }
    }

    #[test]
    fn kernel_unit_exponent() {
        // distance theta*sqrt(2) makes the exponent exactly 1
        let theta = 1.3f64;
        let y = data(vec![vec![0.0], vec![theta * 2.0f64.sqrt()]]);
        let k = gaussian_kernel(&y, theta).unwrap();
        assert!((k.get(0, 1) - (-1.0f64).exp()).abs() < 1e-12);
        assert_eq!(k.get(0, 0), 1.0);
        assert_eq!(k.get(0, 1), k.get(1, 0));
    }

    #[test]
    fn kernel_matches_scalar_loop() {
        let mut s = crate::rng::Stream::new(99);
        let rows: Vec<Vec<f64>> = (0..4).map(|_| (0..2).map(|_| s.uniform(-3.0, 3.0)).collect()).collect();
        let y = data(rows.clone());
        let theta = 1.5f64;
        let k = gaussian_kernel(&y, theta).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let d2: f64 = (0..2).map(|c| (rows[i][c] - rows[j][c]).powi(2)).sum();
                let expect = (-d2 / (2.0 * theta * theta)).exp();
                assert!((k.get(i, j) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kernel_rejects_bad_theta() {
        let y = data(vec![vec![0.0], vec![1.0]]);
        assert!(gaussian_kernel(&y, 0.0).is_err());
        assert!(gaussian_kernel(&y, -1.0).is_err());
    }

    #[test]
    fn kernel_decreases_with_distance() {
        let y = data(vec![vec![0.0], vec![1.0], vec![2.5], vec![7.0]]);
        let k = gaussian_kernel(&y, 1.0).unwrap();
        assert!(k.get(0, 1) > k.get(0, 2));
        assert!(k.get(0, 2) > k.get(0, 3));
    }

    #[test]
    fn theta_collinear_oracle() {
        // 5 collinear points at 0..4, alpha=0.2, beta=0.25.
        let y = data((0..5).map(|i| vec![i as f64]).collect());
        let cfg = ParamConfig { alpha: 0.2, beta: 0.25, ..Default::default() };
        let qs = neighbor_quantiles(&y, 0.25);
        // brute-force oracle: sorted distance lists per point, linear-interp
        // quantile at rank 0.25*(4-1) = 0.75
        let expect_q = |ds: [f64; 4]| {
            let mut v = ds;
            v.sort_by(f64::total_cmp);
            v[0] + 0.75 * (v[1] - v[0])
        };
        let oracle = [
            expect_q([1.0, 2.0, 3.0, 4.0]),
            expect_q([1.0, 1.0, 2.0, 3.0]),
            expect_q([2.0, 1.0, 1.0, 2.0]),
            expect_q([3.0, 2.0, 1.0, 1.0]),
            expect_q([4.0, 3.0, 2.0, 1.0]),
        ];
        for (got, want) in qs.iter().zip(oracle) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        // numerator: 0.8 quantile of sorted qs
        let mut sorted = qs.clone();
        sorted.sort_by(f64::total_cmp);
        let rank: f64 = 0.8 * 4.0;
        let lo = rank.floor() as usize;
        let num = sorted[lo] + (rank - lo as f64) * (sorted[(lo + 1).min(4)] - sorted[lo]);
        let theta = select_theta(&y, &cfg).unwrap();
        let denom = crate::stats::chi2_quantile(1, 0.8).unwrap().sqrt();
        assert!((theta - num / denom).abs() < 1e-10);
    }

    #[test]
    fn theta_rejects_degenerate_data() {
        let y = data(vec![vec![1.0, 1.0]; 4]);
        assert!(select_theta(&y, &ParamConfig::default()).is_err());
    }

    #[test]
    fn theta_rotation_invariant_and_scales_linearly() {
        let mut s = crate::rng::Stream::new(5);
        let rows: Vec<Vec<f64>> = (0..30).map(|_| vec![s.uniform(-2.0, 2.0), s.uniform(-2.0, 2.0)]).collect();
        let cfg = ParamConfig { r_hint: Some(3), ..ParamConfig::default() };
        let base = select_theta(&data(rows.clone()), &cfg).unwrap();
        // rotate by 0.7 rad
        let (c, sn) = (0.7f64.cos(), 0.7f64.sin());
        let rot: Vec<Vec<f64>> =
            rows.iter().map(|p| vec![c * p[0] - sn * p[1], sn * p[0] + c * p[1]]).collect();
        let rotated = select_theta(&data(rot), &cfg).unwrap();
        assert!((base - rotated).abs() < 1e-9 * base);
        // uniform scaling by 3.5
        let scaled: Vec<Vec<f64>> = rows.iter().map(|p| vec![3.5 * p[0], 3.5 * p[1]]).collect();
        let scaled_theta = select_theta(&data(scaled), &cfg).unwrap();
        assert!((scaled_theta - 3.5 * base).abs() < 1e-9 * scaled_theta);
    }

    #[test]
    fn gamma_closed_form_d2() {
        // chi2 CDF at d=2 is 1 - exp(-x/2), so gamma == alpha exactly
        for alpha in [0.05, 0.2, 0.5, 0.9] {
            let g: f64 = select_gamma(2, alpha).unwrap();
            assert!((g - alpha).abs() < 1e-10, "alpha={alpha} gamma={g}");
        }
    }

    #[test]
    fn gamma_rejects_bad_alpha() {
        assert!(select_gamma::<f64>(2, 0.0).is_err());
        assert!(select_gamma::<f64>(2, 1.0).is_err());
        assert!(select_gamma::<f64>(0, 0.2).is_err());
    }

    #[test]
    fn overrides_win() {
        let y = data(vec![vec![0.0], vec![1.0], vec![3.0]]);
        let cfg = ParamConfig { theta_override: Some(2.25), ..Default::default() };
        assert_eq!(select_theta(&y, &cfg).unwrap(), 2.25);
    }
}
