//! Kernel denoising: the rounded closed form of the box-constrained linear
//! relaxation, and an ADMM solver for the PSD-constrained variant.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::mat::{BitMat, Mat};
use crate::scalar::Scalar;
use crate::types::{DataMatrix, DenoiseMethod, DenoisedMatrix, KernelMatrix};

/// ADMM solver knobs.
#[derive(Debug, Clone)]
pub struct AdmmConfig<T> {
    /// Penalty parameter.
    pub rho: T,
    pub max_iters: usize,
    pub tol_primal: T,
    pub tol_dual: T,
    /// Tolerated negative spectrum in the reported solution.
    pub eps_psd: T,
    /// Above this dimension the PSD projection tracks only the positive
    /// eigenspace (adaptively sized) instead of a full eigendecomposition.
    pub dense_projection_limit: usize,
}

impl<T: Scalar> Default for AdmmConfig<T> {
    fn default() -> Self {
        AdmmConfig {
            rho: T::one(),
            max_iters: 2000,
            tol_primal: T::from_f64_lossy(1e-4),
            tol_dual: T::from_f64_lossy(1e-4),
            eps_psd: T::from_f64_lossy(1e-6),
            dense_projection_limit: 320,
        }
    }
}

impl<T: Scalar> AdmmConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > T::zero()) {
            return Err(Error::parameter("rho must be positive"));
        }
        if !(self.tol_primal > T::zero() && self.tol_dual > T::zero() && self.eps_psd > T::zero()) {
            return Err(Error::parameter("tolerances must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::parameter("max_iters must be at least 1"));
        }
        Ok(())
    }
}

/// Outcome of one ADMM solve.
#[derive(Debug, Clone)]
pub struct SolveDiagnostics<T> {
    pub iterations: usize,
    pub primal_residual: T,
    pub dual_residual: T,
    /// `<K - gamma*E, X>` at the returned iterate.
    pub objective: T,
    pub converged: bool,
}

fn check_gamma<T: Scalar>(gamma: T) -> Result<()> {
    if gamma > T::zero() && gamma < T::one() {
        Ok(())
    } else {
        Err(Error::parameter("gamma must lie strictly inside (0,1)"))
    }
}

/// Closed-form maximizer of `<K - gamma*E, X>` over the box `[0,1]^{NxN}`:
/// `X_ij = 1` exactly when `K_ij > gamma` (strict), else 0.
pub fn lp_denoise<T: Scalar>(k: &KernelMatrix<T>, gamma: T) -> Result<DenoisedMatrix<T>> {
    check_gamma(gamma)?;
    let n = k.n();
    let mut x = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if k.get(i, j) > gamma {
                x[(i, j)] = T::one();
            }
        }
    }
    Ok(DenoisedMatrix::from_dense(x, gamma, DenoiseMethod::Lp))
}

/// Rounded solution computed straight from the data in bit-packed form, for
/// problem sizes where an N x N float matrix is not worth holding.
pub fn lp_denoise_streaming<T: Scalar>(
    y: &DataMatrix<T>,
    theta: T,
    gamma: T,
) -> Result<DenoisedMatrix<T>> {
    check_gamma(gamma)?;
    if !(theta > T::zero()) {
        return Err(Error::parameter("theta must be positive"));
    }
    let n = y.n();
    // K_ij > gamma  <=>  dist^2 < -2 theta^2 ln(gamma)
    let cutoff = -(T::one() + T::one()) * theta * theta * gamma.ln();
    let row_bits: Vec<Vec<u64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let words = n.div_ceil(64);
            let mut row = vec![0u64; words];
            for j in 0..n {
                if i == j || y.points().row_dist_sq(i, j) < cutoff {
                    row[j / 64] |= 1u64 << (j % 64);
                }
            }
            row
        })
        .collect();
    let mut bits = BitMat::zeros(n);
    for (i, row) in row_bits.into_iter().enumerate() {
        for (w, val) in row.into_iter().enumerate() {
            if val != 0 {
                for b in 0..64 {
                    if (val >> b) & 1 == 1 {
                        bits.set(i, w * 64 + b);
                    }
                }
            }
        }
    }
    Ok(DenoisedMatrix::from_bits(bits, gamma))
}

/// ADMM for `maximize <K - gamma*E, X>` over `{0 <= X_ij <= 1} ∩ {X PSD}`.
///
/// Splitting: box-constrained X, PSD-constrained Z, consensus X = Z with
/// scaled dual U. The X-update is a clip, the Z-update a PSD projection, and
/// the iterate is warm-started from the PSD projection of the rounded LP
/// solution. Non-convergence is not an error: the best iterate comes back
/// with `converged = false` and the caller decides.
pub fn sdp_denoise<T: Scalar>(
    k: &KernelMatrix<T>,
    gamma: T,
    cfg: &AdmmConfig<T>,
) -> Result<(DenoisedMatrix<T>, SolveDiagnostics<T>)> {
    check_gamma(gamma)?;
    cfg.validate()?;
    let n = k.n();
    let rho = cfg.rho;

    // cost matrix C = K - gamma E
    let mut c = k.matrix().clone();
    for v in c.data_mut() {
        *v -= gamma;
    }

    // warm start: PSD projection of the rounded solution
    let mut lp = Mat::<T>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if c[(i, j)] > T::zero() {
                lp[(i, j)] = T::one();
            }
        }
    }
    let mut projector = PsdProjector::new(n, cfg.dense_projection_limit);
    let mut z = projector.project(&lp)?;
    let mut u = Mat::<T>::zeros(n, n);
    let mut x = z.clone();

    let mut iterations = 0;
    let mut primal = T::infinity();
    let mut dual = T::infinity();
    let mut converged = false;
    let one = T::one();
    let zero = T::zero();

    while iterations < cfg.max_iters {
        iterations += 1;
        // X-update: clip(Z - U + C/rho) onto the box, then symmetrize
        x.data_mut()
            .par_iter_mut()
            .zip(z.data().par_iter().zip(u.data().par_iter().zip(c.data().par_iter())))
            .for_each(|(xv, (&zv, (&uv, &cv)))| {
                let t = zv - uv + cv / rho;
                *xv = if t < zero {
                    zero
                } else if t > one {
                    one
                } else {
                    t
                };
            });
        x.symmetrize();

        // Z-update: PSD projection of X + U
        let mut m = x.clone();
        m.data_mut().par_iter_mut().zip(u.data().par_iter()).for_each(|(mv, &uv)| *mv += uv);
        m.symmetrize();
        let z_next = projector.project(&m)?;

        // residuals
        let mut dz = zero;
        for (a, b) in z_next.data().iter().zip(z.data().iter()) {
            let d = *a - *b;
            dz += d * d;
        }
        let mut xz = zero;
        for (a, b) in x.data().iter().zip(z_next.data().iter()) {
            let d = *a - *b;
            xz += d * d;
        }
        let x_norm = x.frobenius_norm().max(one);
        let u_norm = u.frobenius_norm().max(one);
        primal = xz.sqrt() / x_norm;
        dual = rho * dz.sqrt() / u_norm;

        // U-update
        u.data_mut()
            .par_iter_mut()
            .zip(x.data().par_iter().zip(z_next.data().par_iter()))
            .for_each(|(uv, (&xv, &zv))| *uv += xv - zv);

        z = z_next;
        if primal < cfg.tol_primal && dual < cfg.tol_dual {
            converged = true;
            break;
        }
    }

    // report the PSD iterate clipped to the box
    let mut out = z;
    out.data_mut().par_iter_mut().for_each(|v| {
        if *v < zero {
            *v = zero;
        } else if *v > one {
            *v = one;
        }
    });
    out.symmetrize();
    let objective = out.data().iter().zip(c.data().iter()).fold(zero, |a, (&x, &c)| a + x * c);
    let diags = SolveDiagnostics {
        iterations,
        primal_residual: primal,
        dual_residual: dual,
        objective,
        converged,
    };
    Ok((DenoisedMatrix::from_dense(out, gamma, DenoiseMethod::Sdp), diags))
}

/// PSD projection that reuses the positive eigenspace across calls.
///
/// Small matrices get the exact dense projection. Larger ones track the
/// positive part with warm-started subspace iteration: the rank is grown
/// until a comfortable count of negative Ritz values certifies the positive
/// spectrum has been captured, and shrunk as ADMM settles.
struct PsdProjector<T> {
    n: usize,
    dense_limit: usize,
    subspace: Option<Mat<T>>,
}

impl<T: Scalar> PsdProjector<T> {
    fn new(n: usize, dense_limit: usize) -> Self {
        PsdProjector { n, dense_limit, subspace: None }
    }

    fn project(&mut self, m: &Mat<T>) -> Result<Mat<T>> {
        if self.n <= self.dense_limit {
            return linalg::psd_project(m);
        }
        self.project_partial(m)
    }

    fn project_partial(&mut self, m: &Mat<T>) -> Result<Mat<T>> {
        let n = self.n;
        let min_buffer = 8;
        let mut k = match &self.subspace {
            Some(v) => (v.cols() + min_buffer).min(n),
            None => 32.min(n),
        };
        loop {
            let v0 = match &self.subspace {
                Some(v) if v.cols() >= k => Some(trim_columns(v, k)),
                Some(v) => Some(pad_columns(v, k)),
                None => None,
            };
            let (vals, vecs) = subspace_round(m, k, v0)?;
            let n_pos = vals.iter().filter(|v| **v > T::zero()).count();
            // need a certificate: several converged Ritz values below zero
            if n_pos + min_buffer / 2 <= k || k == n {
                let keep = (n_pos + min_buffer).min(k);
                self.subspace = Some(trim_columns(&vecs, keep.max(1)));
                let mut out = Mat::zeros(n, n);
                linalg::accumulate_outer(&mut out, &vals, &vecs, T::zero());
                out.symmetrize();
                return Ok(out);
            }
            k = (k * 2).min(n);
            if k * 2 > n {
                // positive rank is a large fraction of n: dense is safer
                self.subspace = None;
                return linalg::psd_project(m);
            }
        }
    }
}

fn trim_columns<T: Scalar>(m: &Mat<T>, k: usize) -> Mat<T> {
    let n = m.rows();
    let k = k.min(m.cols());
    let mut out = Mat::zeros(n, k);
    for i in 0..n {
        for j in 0..k {
            out[(i, j)] = m[(i, j)];
        }
    }
    out
}

fn pad_columns<T: Scalar>(m: &Mat<T>, k: usize) -> Mat<T> {
    let n = m.rows();
    let mut out = Mat::zeros(n, k);
    for i in 0..n {
        for j in 0..m.cols().min(k) {
            out[(i, j)] = m[(i, j)];
        }
    }
    let mut s = crate::rng::Stream::new(0xadd_c015 ^ k as u64);
    for j in m.cols().min(k)..k {
        for i in 0..n {
            out[(i, j)] = s.standard_normal();
        }
    }
    out
}

/// A few rounds of subspace iteration with Rayleigh-Ritz, warm-startable.
fn subspace_round<T: Scalar>(m: &Mat<T>, k: usize, v0: Option<Mat<T>>) -> Result<(Vec<T>, Mat<T>)> {
    let rounds = if v0.is_some() { 2 } else { 6 };
    linalg::ritz_refine(m, k, v0, rounds)
}
