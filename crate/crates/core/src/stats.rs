//! Order statistics and the chi-squared quantile.
//!
//! The chi-squared inverse CDF is implemented from scratch (regularized lower
//! incomplete gamma plus bisection) so the crate carries no statistics
//! dependency and the d=2 closed form is testable exactly.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Quantile of a sorted sample: linear interpolation at rank `p * (M - 1)`,
/// zero-indexed. `sorted` must be ascending and nonempty.
pub fn quantile_sorted<T: Scalar>(sorted: &[T], p: f64) -> T {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&p));
    let m = sorted.len();
    if m == 1 {
        return sorted[0];
    }
    let t = p * (m - 1) as f64;
    let lo = t.floor() as usize;
    let hi = (lo + 1).min(m - 1);
    let frac = T::from_f64_lossy(t - lo as f64);
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Quantile of an unsorted sample (sorts a copy).
pub fn quantile<T: Scalar>(xs: &[T], p: f64) -> T {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    quantile_sorted(&v, p)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function (Lanczos approximation), `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return std::f64::consts::PI.ln() - (std::f64::consts::PI * x).sin().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma P(a, x), series branch (x < a + 1).
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..500 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Regularized upper incomplete gamma Q(a, x), continued fraction (x >= a + 1).
fn gamma_q_cf(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Regularized lower incomplete gamma P(a, x) for `a > 0`, `x >= 0`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_cf(a, x)
    }
}

/// Chi-squared CDF with `d` degrees of freedom.
pub fn chi2_cdf(d: usize, x: f64) -> f64 {
    gamma_p(d as f64 / 2.0, x / 2.0)
}

/// Chi-squared quantile (inverse CDF) by bisection, |CDF(x) - p| driven to
/// 1e-10 territory via interval width.
pub fn chi2_quantile(d: usize, p: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::parameter("chi-squared needs at least 1 degree of freedom"));
    }
    if !(0.0 < p && p < 1.0) {
        return Err(Error::parameter(format!("quantile level {p} outside (0,1)")));
    }
    let mut lo = 0.0;
    let mut hi = d as f64;
    while chi2_cdf(d, hi) < p {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::Convergence {
                iterations: 0,
                context: format!("chi-squared quantile bracket for d={d}, p={p}"),
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_cdf(d, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * (1.0 + hi) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
