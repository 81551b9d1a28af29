//! Symmetric eigendecomposition.
//!
//! Dense path: Householder tridiagonalization followed by implicit-shift QL,
//! the classic EISPACK pair. Above [`ITERATIVE_THRESHOLD`] points a
//! subspace-iteration path computes just the leading eigenpairs through the
//! [`SymOp`] interface, which is what the large benchmark runs need.

use crate::error::{Error, Result};
use crate::mat::{Mat, SymOp};
use crate::scalar::Scalar;

/// Dense solves are used up to this dimension; beyond it, requests for a thin
/// set of leading eigenpairs go through subspace iteration.
pub const ITERATIVE_THRESHOLD: usize = 4_000;

/// Relative asymmetry tolerated before the contract check rejects the input.
pub const SYMMETRY_RTOL: f64 = 1e-10;

/// Leading eigenpairs of a symmetric matrix: eigenvalues descending, the
/// matching orthonormal eigenvectors as columns, signs normalized so each
/// column's first nonzero component is positive.
pub fn sym_eigendecompose<T: Scalar>(m: &Mat<T>, k: usize) -> Result<(Vec<T>, Mat<T>)> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::contract(format!("expected square matrix, got {}x{}", n, m.cols())));
    }
    if k == 0 || k > n {
        return Err(Error::parameter(format!("k={k} outside 1..={n}")));
    }
    let scale = m.data().iter().fold(T::zero(), |a, &x| a.max(x.abs()));
    if m.max_abs_asymmetry().to_f64_lossy() > SYMMETRY_RTOL * scale.to_f64_lossy().max(1e-300) {
        return Err(Error::contract("matrix is not symmetric within 1e-10 relative tolerance"));
    }
    if n > ITERATIVE_THRESHOLD && k * 4 < n {
        let (vals, vecs) = topk_eigenpairs(m, k, 1e-9)?;
        return Ok((vals, vecs));
    }
    let (mut d, mut z) = full_symmetric_eigen(m)?;
    // descending order
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).expect("finite eigenvalues"));
    let mut values = Vec::with_capacity(k);
    let mut vectors = Mat::zeros(n, k);
    for (col, &src) in order.iter().take(k).enumerate() {
        values.push(d[src]);
        for row in 0..n {
            vectors[(row, col)] = z[(row, src)];
        }
    }
    d.clear();
    z = Mat::zeros(0, 0);
    let _ = z;
    sign_normalize_columns(&mut vectors);
    Ok((values, vectors))
}

/// Full spectrum of a symmetric matrix (unsorted), eigenvectors as columns.
fn full_symmetric_eigen<T: Scalar>(m: &Mat<T>) -> Result<(Vec<T>, Mat<T>)> {
    let n = m.rows();
    let mut z = m.clone();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(&mut z, &mut d, &mut e);
    tql2(&mut d, &mut e, &mut z)?;
    Ok((d, z))
}

/// Householder reduction of `a` to tridiagonal form, accumulating the
/// orthogonal transform in `a` itself (diagonal in `d`, subdiagonal in `e`).
fn tred2<T: Scalar>(a: &mut Mat<T>, d: &mut [T], e: &mut [T]) {
    let n = a.rows();
    for j in 0..n {
        d[j] = a[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = T::zero();
        let mut scale = T::zero();
        if l > 0 {
            for k in 0..i {
                scale += d[k].abs();
            }
        }
        if scale == T::zero() {
            e[i] = d[l];
            for j in 0..i {
                d[j] = a[(l, j)];
                a[(i, j)] = T::zero();
                a[(j, i)] = T::zero();
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let f = d[l];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[l] = f - g;
            for j in 0..i {
                e[j] = T::zero();
            }
            for j in 0..i {
                let f = d[j];
                a[(j, i)] = f;
                let mut g = e[j] + a[(j, j)] * f;
                for k in (j + 1)..i {
                    g += a[(k, j)] * d[k];
                    e[k] += a[(k, j)] * f;
                }
                e[j] = g;
            }
            let mut f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    let upd = f * e[k] + g * d[k];
                    a[(k, j)] -= upd;
                }
                d[j] = a[(l, j)];
                a[(i, j)] = T::zero();
            }
        }
        d[i] = h;
    }
    // accumulate transforms
    for i in 0..n.saturating_sub(1) {
        a[(n - 1, i)] = a[(i, i)];
        a[(i, i)] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = a[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += a[(k, i + 1)] * a[(k, j)];
                }
                for k in 0..=i {
                    let upd = g * d[k];
                    a[(k, j)] -= upd;
                }
            }
        }
        for k in 0..=i {
            a[(k, i + 1)] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = a[(n - 1, j)];
        a[(n - 1, j)] = T::zero();
    }
    a[(n - 1, n - 1)] = T::one();
    e[0] = T::zero();
}

fn hypot<T: Scalar>(a: T, b: T) -> T {
    let (a, b) = (a.abs(), b.abs());
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if hi == T::zero() {
        return T::zero();
    }
    let r = lo / hi;
    hi * (T::one() + r * r).sqrt()
}

/// Implicit-shift QL on the tridiagonal (d, e), rotations accumulated into z.
fn tql2<T: Scalar>(d: &mut [T], e: &mut [T], z: &mut Mat<T>) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();

    let eps = T::from_f64_lossy(f64::EPSILON);
    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0usize;
            loop {
                iter += 1;
                if iter > 50 {
                    return Err(Error::Convergence {
                        iterations: iter,
                        context: format!("QL sweep for eigenvalue {l} of {n}"),
                    });
                }
                let g = d[l];
                let two = T::from_f64_lossy(2.0);
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = hypot(p, T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for i in (l + 2)..n {
                    d[i] -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    rotate_columns(z, i, s, c);
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    Ok(())
}

/// Apply one Givens rotation to columns (i, i+1) of z across all rows.
#[inline]
fn rotate_columns<T: Scalar>(z: &mut Mat<T>, i: usize, s: T, c: T) {
    let n = z.rows();
    let cols = z.cols();
    let data = z.data_mut();
    for k in 0..n {
        let base = k * cols;
        let h = data[base + i + 1];
        let zi = data[base + i];
        data[base + i + 1] = s * zi + c * h;
        data[base + i] = c * zi - s * h;
    }
}

/// Flip each column so its first component of meaningful magnitude is
/// positive. Keeps eigenvector output deterministic for tests.
pub fn sign_normalize_columns<T: Scalar>(v: &mut Mat<T>) {
    let (n, k) = (v.rows(), v.cols());
    for j in 0..k {
        let mut col_max = T::zero();
        for i in 0..n {
            col_max = col_max.max(v[(i, j)].abs());
        }
        let tol = col_max * T::from_f64_lossy(1e-12);
        let mut flip = false;
        for i in 0..n {
            let x = v[(i, j)];
            if x.abs() > tol {
                flip = x < T::zero();
                break;
            }
        }
        if flip {
            for i in 0..n {
                v[(i, j)] = -v[(i, j)];
            }
        }
    }
}

/// Leading `k` eigenpairs of a symmetric operator by subspace iteration with
/// Rayleigh-Ritz, deterministic start. Converges fast when the wanted part of
/// the spectrum dominates the bulk, which holds for denoised clustering
/// matrices.
pub fn topk_eigenpairs<T: Scalar, O: SymOp<T> + ?Sized>(
    op: &O,
    k: usize,
    rtol: f64,
) -> Result<(Vec<T>, Mat<T>)> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::parameter(format!("k={k} outside 1..={n}")));
    }
    let p = (2 * k + 10).min(n);
    let mut v = deterministic_basis(n, p);
    let mut ritz_prev: Option<Vec<T>> = None;
    let max_rounds = 600;
    for round in 0..max_rounds {
        let av = apply_block(op, &v);
        // Rayleigh-Ritz on the subspace
        let mut b = orthonormalize(av);
        let ab = apply_block(op, &b);
        let small = block_inner(&b, &ab); // p x p symmetric
        let (w, s) = {
            let (vals, vecs) = full_symmetric_eigen(&small)?;
            let mut order: Vec<usize> = (0..vals.len()).collect();
            order.sort_by(|&x, &y| vals[y].partial_cmp(&vals[x]).unwrap());
            let mut wv = Vec::with_capacity(vals.len());
            let mut sv = Mat::zeros(vals.len(), vals.len());
            for (c, &src) in order.iter().enumerate() {
                wv.push(vals[src]);
                for r in 0..vals.len() {
                    sv[(r, c)] = vecs[(r, src)];
                }
            }
            (wv, sv)
        };
        b = b.matmul(&s);
        let converged = match &ritz_prev {
            Some(prev) => {
                let scale = w[0].abs().max(T::from_f64_lossy(1e-30));
                (0..k).all(|i| ((w[i] - prev[i]).abs() / scale).to_f64_lossy() < rtol)
            }
            None => false,
        };
        if converged || round == max_rounds - 1 {
            // residual check on the k wanted pairs
            let bk = take_columns(&b, k);
            let abk = apply_block(op, &bk);
            let mut worst = 0.0f64;
            for j in 0..k {
                let mut res = T::zero();
                for i in 0..n {
                    let r = abk[(i, j)] - w[j] * bk[(i, j)];
                    res += r * r;
                }
                let denom = w[0].abs().max(T::from_f64_lossy(1e-30));
                worst = worst.max((res.sqrt() / denom).to_f64_lossy());
            }
            if worst < rtol.max(1e-8) * 10.0 || converged {
                let mut vectors = bk;
                sign_normalize_columns(&mut vectors);
                return Ok((w.into_iter().take(k).collect(), vectors));
            }
            if round == max_rounds - 1 {
                return Err(Error::Convergence {
                    iterations: max_rounds,
                    context: format!("subspace iteration for top {k} of {n}"),
                });
            }
        }
        ritz_prev = Some(w);
        v = b;
    }
    unreachable!()
}

/// A few rounds of subspace iteration followed by Rayleigh-Ritz extraction;
/// returns all `k` Ritz pairs, descending. `v0` warm-starts the subspace.
pub(crate) fn ritz_refine<T: Scalar, O: SymOp<T> + ?Sized>(
    op: &O,
    k: usize,
    v0: Option<Mat<T>>,
    rounds: usize,
) -> Result<(Vec<T>, Mat<T>)> {
    let n = op.dim();
    let k = k.min(n);
    let mut v = match v0 {
        Some(v) if v.rows() == n && v.cols() == k => orthonormalize(v),
        _ => deterministic_basis(n, k),
    };
    for _ in 0..rounds {
        v = orthonormalize(apply_block(op, &v));
    }
    let av = apply_block(op, &v);
    let small = block_inner(&v, &av);
    let (vals, vecs) = full_symmetric_eigen(&small)?;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap());
    let mut w = Vec::with_capacity(k);
    let mut rot = Mat::zeros(k, k);
    for (c, &src) in order.iter().enumerate() {
        w.push(vals[src]);
        for r in 0..k {
            rot[(r, c)] = vecs[(r, src)];
        }
    }
    Ok((w, v.matmul(&rot)))
}

fn deterministic_basis<T: Scalar>(n: usize, p: usize) -> Mat<T> {
    let mut s = crate::rng::Stream::new(0x5eed_ba5e);
    let mut v = Mat::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            v[(i, j)] = s.standard_normal();
        }
    }
    orthonormalize(v)
}

fn apply_block<T: Scalar, O: SymOp<T> + ?Sized>(op: &O, v: &Mat<T>) -> Mat<T> {
    let (n, p) = (v.rows(), v.cols());
    let mut out = Mat::zeros(n, p);
    let mut col = vec![T::zero(); n];
    let mut res = vec![T::zero(); n];
    for j in 0..p {
        for i in 0..n {
            col[i] = v[(i, j)];
        }
        op.apply(&col, &mut res);
        for i in 0..n {
            out[(i, j)] = res[i];
        }
    }
    out
}

/// Modified Gram-Schmidt with re-orthogonalization pass; drops nothing, mends
/// rank deficiency by substituting a fresh deterministic direction.
fn orthonormalize<T: Scalar>(mut v: Mat<T>) -> Mat<T> {
    let (n, p) = (v.rows(), v.cols());
    let mut fallback = crate::rng::Stream::new(0xfa11_bacc);
    for j in 0..p {
        for _pass in 0..2 {
            for i in 0..j {
                let mut dot = T::zero();
                for r in 0..n {
                    dot += v[(r, i)] * v[(r, j)];
                }
                for r in 0..n {
                    let upd = dot * v[(r, i)];
                    v[(r, j)] -= upd;
                }
            }
        }
        let mut norm = T::zero();
        for r in 0..n {
            norm += v[(r, j)] * v[(r, j)];
        }
        let mut norm = norm.sqrt();
        if norm.to_f64_lossy() < 1e-150 {
            for r in 0..n {
                v[(r, j)] = fallback.standard_normal();
            }
            for i in 0..j {
                let mut dot = T::zero();
                for r in 0..n {
                    dot += v[(r, i)] * v[(r, j)];
                }
                for r in 0..n {
                    let upd = dot * v[(r, i)];
                    v[(r, j)] -= upd;
                }
            }
            norm = (0..n).fold(T::zero(), |a, r| a + v[(r, j)] * v[(r, j)]).sqrt();
        }
        for r in 0..n {
            v[(r, j)] = v[(r, j)] / norm;
        }
    }
    v
}

fn block_inner<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    let (n, p) = (a.rows(), a.cols());
    let mut out = Mat::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            let mut s = T::zero();
            for r in 0..n {
                s += a[(r, i)] * b[(r, j)];
            }
            out[(i, j)] = s;
        }
    }
    out.symmetrize();
    out
}

fn take_columns<T: Scalar>(m: &Mat<T>, k: usize) -> Mat<T> {
    let n = m.rows();
    let mut out = Mat::zeros(n, k);
    for i in 0..n {
        for j in 0..k {
            out[(i, j)] = m[(i, j)];
        }
    }
    out
}

/// Projection of a symmetric matrix onto the PSD cone: eigendecompose, zero
/// the negative eigenvalues, reassemble.
pub fn psd_project<T: Scalar>(m: &Mat<T>) -> Result<Mat<T>> {
    let n = m.rows();
    let (vals, vecs) = full_sorted_eigen(m)?;
    let mut out = Mat::zeros(n, n);
    accumulate_outer(&mut out, &vals, &vecs, T::zero());
    out.symmetrize();
    Ok(out)
}

/// Full spectrum, descending.
pub(crate) fn full_sorted_eigen<T: Scalar>(m: &Mat<T>) -> Result<(Vec<T>, Mat<T>)> {
    let n = m.rows();
    let (d, z) = full_symmetric_eigen(m)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).unwrap());
    let mut vals = Vec::with_capacity(n);
    let mut vecs = Mat::zeros(n, n);
    for (c, &src) in order.iter().enumerate() {
        vals.push(d[src]);
        for r in 0..n {
            vecs[(r, c)] = z[(r, src)];
        }
    }
    Ok((vals, vecs))
}

/// `out += sum_j max(vals[j], floor) == vals[j] > floor ? vals[j] * v_j v_j^T : 0`
pub(crate) fn accumulate_outer<T: Scalar>(out: &mut Mat<T>, vals: &[T], vecs: &Mat<T>, floor: T) {
    use rayon::prelude::*;
    let n = out.rows();
    let cols: Vec<usize> = (0..vals.len()).filter(|&j| vals[j] > floor).collect();
    let data = out.data_mut();
    data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for &j in &cols {
            let w = vals[j] * vecs[(i, j)];
            for (k, slot) in row.iter_mut().enumerate() {
                *slot += w * vecs[(k, j)];
            }
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_symmetric(n: usize, seed: u64) -> Mat<f64> {
        let mut s = crate::rng::Stream::new(seed);
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let x: f64 = s.uniform(-1.0, 1.0);
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        m
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let (vals, vecs) = sym_eigendecompose(&Mat::<f64>::identity(3), 3).unwrap();
        for v in vals {
            assert!((v - 1.0).abs() < 1e-12);
        }
        // columns orthonormal
        for a in 0..3 {
            for b in 0..3 {
                let dot: f64 = (0..3).map(|i| vecs[(i, a)] * vecs[(i, b)]).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn diagonal_case() {
        let mut m = Mat::<f64>::zeros(3, 3);
        m[(0, 0)] = 5.0;
        m[(1, 1)] = 2.0;
        m[(2, 2)] = 1.0;
        let (vals, vecs) = sym_eigendecompose(&m, 2).unwrap();
        assert!((vals[0] - 5.0).abs() < 1e-12);
        assert!((vals[1] - 2.0).abs() < 1e-12);
        // sign convention makes these exactly +e1, +e2
        assert!((vecs[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((vecs[(1, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric_and_bad_k() {
        let mut m = Mat::<f64>::identity(3);
        m[(0, 1)] = 0.5;
        assert!(matches!(sym_eigendecompose(&m, 2), Err(Error::Contract(_))));
        let id = Mat::<f64>::identity(3);
        assert!(sym_eigendecompose(&id, 0).is_err());
        assert!(sym_eigendecompose(&id, 4).is_err());
    }

    #[test]
    fn reconstruction_up_to_n_50() {
        for n in [5, 20, 50] {
            let m = random_symmetric(n, 100 + n as u64);
            let (vals, vecs) = sym_eigendecompose(&m, n).unwrap();
            // rebuild V diag(vals) V^T
            let mut rec = Mat::<f64>::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for c in 0..n {
                        s += vecs[(i, c)] * vals[c] * vecs[(j, c)];
                    }
                    rec[(i, j)] = s;
                }
            }
            let mut diff = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    diff += (rec[(i, j)] - m[(i, j)]).powi(2);
                }
            }
            assert!(diff.sqrt() <= 1e-7 * m.frobenius_norm(), "n={n}");
        }
    }

    #[test]
    fn residuals_small() {
        let n = 30;
        let m = random_symmetric(n, 7);
        let (vals, vecs) = sym_eigendecompose(&m, n).unwrap();
        let norm = vals.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        for j in 0..n {
            let v = vecs.column(j);
            let mut mv = vec![0.0; n];
            SymOp::apply(&m, &v, &mut mv);
            let res: f64 =
                (0..n).map(|i| (mv[i] - vals[j] * v[i]).powi(2)).sum::<f64>().sqrt();
            assert!(res <= 1e-8 * norm.max(1.0), "j={j} res={res}");
        }
    }

    #[test]
    fn subspace_iteration_matches_dense() {
        let n = 60;
        // blocky matrix with dominant structure plus noise
        let mut m = random_symmetric(n, 11);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] *= 0.05;
                if i / 20 == j / 20 {
                    m[(i, j)] += 1.0;
                }
            }
        }
        m.symmetrize();
        let (dense_vals, _) = sym_eigendecompose(&m, 5).unwrap();
        let (iter_vals, vecs) = topk_eigenpairs(&m, 5, 1e-10).unwrap();
        for j in 0..5 {
            assert!(
                (dense_vals[j] - iter_vals[j]).abs() < 1e-6 * dense_vals[0].abs(),
                "j={j}: {} vs {}",
                dense_vals[j],
                iter_vals[j]
            );
        }
        // orthonormal columns
        for a in 0..5 {
            for b in 0..5 {
                let dot: f64 = (0..n).map(|i| vecs[(i, a)] * vecs[(i, b)]).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn psd_projection_floors_spectrum() {
        let m = random_symmetric(25, 42);
        let p = psd_project(&m).unwrap();
        let (vals, _) = sym_eigendecompose(&p, 25).unwrap();
        assert!(vals[24] >= -1e-10);
        // idempotent on already-PSD input
        let p2 = psd_project(&p).unwrap();
        let mut diff = 0.0f64;
        for i in 0..25 {
            for j in 0..25 {
                diff = diff.max((p2[(i, j)] - p[(i, j)]).abs());
            }
        }
        assert!(diff < 1e-8);
    }
}
