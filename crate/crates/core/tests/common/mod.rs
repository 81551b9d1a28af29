//! Independent oracles for integration and acceptance tests. Everything here
//! deliberately avoids the library's own numerical paths: the eigensolver is
//! a plain cyclic Jacobi sweep, the chi-squared CDF comes from quadrature,
//! and k-means optima come from exhaustive enumeration.

#![allow(dead_code)]

/// Cyclic Jacobi eigensolver for small symmetric matrices. Returns
/// (eigenvalues descending, eigenvectors as columns of a row-major n*n
/// buffer).
pub fn jacobi_eigen(a_in: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = a_in.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off.sqrt() < 1e-14 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut vals: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| vals[y].total_cmp(&vals[x]));
    let sorted_vals: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let mut sorted_vecs = vec![0.0; n * n];
    for (c, &src) in order.iter().enumerate() {
        for r in 0..n {
            sorted_vecs[r * n + c] = v[r * n + src];
        }
    }
    vals.clear();
    (sorted_vals, sorted_vecs)
}

/// Chi-squared CDF by adaptive Simpson quadrature of the density; an
/// integration-based check on the incomplete-gamma implementation.
pub fn chi2_cdf_quadrature(d: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let k = d as f64 / 2.0;
    let log_norm = -k * 2.0f64.ln() - ln_gamma_stirling(k);
    // substitute t = u^2: removes the integrable singularity at 0 for d = 1
    let integrand = |u: f64| -> f64 {
        if u <= 0.0 {
            0.0
        } else {
            let t = u * u;
            (log_norm + (k - 1.0) * t.ln() - t / 2.0).exp() * 2.0 * u
        }
    };
    simpson_adaptive(&integrand, 0.0, x.sqrt(), 1e-13, 40)
}

fn ln_gamma_stirling(x: f64) -> f64 {
    // Stirling series with enough shift for small arguments
    if x < 8.0 {
        return ln_gamma_stirling(x + 1.0) - x.ln();
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

fn simpson_adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64, depth: usize) -> f64 {
    let c = 0.5 * (a + b);
    let whole = simpson_rule(f, a, b);
    let left = simpson_rule(f, a, c);
    let right = simpson_rule(f, c, b);
    if depth == 0 || (left + right - whole).abs() < 15.0 * eps {
        left + right + (left + right - whole) / 15.0
    } else {
        simpson_adaptive(f, a, c, eps / 2.0, depth - 1)
            + simpson_adaptive(f, c, b, eps / 2.0, depth - 1)
    }
}

fn simpson_rule(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b))
}

/// Chi-squared quantile by bisection on the quadrature CDF.
pub fn chi2_quantile_quadrature(d: usize, p: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = d as f64;
    while chi2_cdf_quadrature(d, hi) < p {
        hi *= 2.0;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if chi2_cdf_quadrature(d, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Optimal k-means cost by exhaustive enumeration of all r^n assignments
/// (empty clusters allowed; they can only match or worsen the optimum).
pub fn brute_force_kmeans_cost(points: &[Vec<f64>], r: usize) -> f64 {
    let n = points.len();
    let d = points[0].len();
    assert!(r.pow(n as u32) < 100_000_000, "enumeration too large");
    let mut best = f64::INFINITY;
    let total = r.pow(n as u32);
    let mut assign = vec![0usize; n];
    for code in 0..total {
        let mut c = code;
        for a in assign.iter_mut() {
            *a = c % r;
            c /= r;
        }
        let mut cost = 0.0;
        for k in 0..r {
            let members: Vec<&Vec<f64>> = (0..n).filter(|&i| assign[i] == k).map(|i| &points[i]).collect();
            if members.is_empty() {
                continue;
            }
            let mut mean = vec![0.0; d];
            for m in &members {
                for j in 0..d {
                    mean[j] += m[j];
                }
            }
            for v in mean.iter_mut() {
                *v /= members.len() as f64;
            }
            for m in &members {
                for j in 0..d {
                    cost += (m[j] - mean[j]) * (m[j] - mean[j]);
                }
            }
        }
        if cost < best {
            best = cost;
        }
    }
    best
}

/// Drive a symmetric matrix into (approximately) the intersection of the
/// `[0,1]` box and the PSD cone by alternating projections. The returned
/// point is PSD exactly and box-feasible up to the convergence residual.
pub fn project_box_psd(x: &mut Vec<f64>, n: usize, rounds: usize) {
    for _ in 0..rounds {
        for v in x.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        *x = psd_project_jacobi(x, n);
        // stop when the box violation is negligible
        let viol = x
            .iter()
            .map(|&v| if v < 0.0 { -v } else { (v - 1.0).max(0.0) })
            .fold(0.0f64, f64::max);
        if viol < 1e-12 {
            break;
        }
    }
    feasibilize_box_psd(x, n);
}

/// Turn a PSD matrix with small box violations into an exactly feasible
/// point: adding `a * E` keeps it PSD and lifts negative entries, rescaling
/// keeps it PSD and restores the upper bound. Objectives evaluated on the
/// result can never exceed the true constrained optimum.
pub fn feasibilize_box_psd(x: &mut [f64], n: usize) {
    let neg = x.iter().fold(0.0f64, |a, &v| a.max(-v));
    if neg > 0.0 {
        for v in x.iter_mut() {
            *v += neg;
        }
    }
    let hi = x.iter().fold(0.0f64, |a, &v| a.max(v));
    if hi > 1.0 {
        let s = 1.0 / hi;
        for v in x.iter_mut() {
            *v *= s;
        }
    }
}

/// Projected-gradient-ascent reference for
/// `maximize <C, X> over {0<=X<=1} ∩ PSD`: diminishing gradient steps, each
/// followed by alternating projections onto the box and the PSD cone (via
/// the Jacobi oracle) until the iterate is essentially inside both sets.
/// Slow but independent of the ADMM path.
pub fn projected_gradient_sdp(c: &[f64], n: usize, iters: usize) -> Vec<f64> {
    let mut x: Vec<f64> = c.iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect();
    project_box_psd(&mut x, n, 60);
    let c_max = c.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1e-12);
    let mut best = x.clone();
    let mut best_obj = objective(&x, c, n);
    for t in 0..iters {
        // warm-started: keep early steps moderate, then diminish
        let step = 0.5 / (c_max * ((t + 10) as f64).sqrt());
        for i in 0..n * n {
            x[i] += step * c[i];
        }
        project_box_psd(&mut x, n, 40);
        let obj = objective(&x, c, n);
        if obj > best_obj {
            best_obj = obj;
            best = x.clone();
        }
    }
    best
}

pub fn objective(x: &[f64], c: &[f64], n: usize) -> f64 {
    (0..n * n).map(|i| x[i] * c[i]).sum()
}

pub fn psd_project_jacobi(m: &[f64], n: usize) -> Vec<f64> {
    let (vals, vecs) = jacobi_eigen(m, n);
    let mut out = vec![0.0; n * n];
    for c in 0..n {
        if vals[c] <= 0.0 {
            continue;
        }
        for i in 0..n {
            let w = vals[c] * vecs[i * n + c];
            for j in 0..n {
                out[i * n + j] += w * vecs[j * n + c];
            }
        }
    }
    // numerical symmetrization
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (out[i * n + j] + out[j * n + i]);
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
    }
    out
}

/// All ways to write `n` as an ordered sum of parts within [lo, hi] bounds on
/// count and a minimum part size.
pub fn partitions_with_parts(n: usize, parts: usize, min_part: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(remaining: usize, parts_left: usize, min_part: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts_left == 0 {
            if remaining == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let start = min_part;
        for p in start..=remaining {
            if remaining - p < min_part * (parts_left - 1) {
                break;
            }
            cur.push(p);
            rec(remaining - p, parts_left - 1, min_part, cur, out);
            cur.pop();
        }
    }
    rec(n, parts, min_part, &mut cur, &mut out);
    out
}

/// Deterministic xorshift for fixture construction (independent of the
/// library's ChaCha streams).
pub struct XorShift(pub u64);

impl XorShift {
    pub fn next_f64(&mut self) -> f64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        (x >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}
