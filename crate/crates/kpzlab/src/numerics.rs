//! Small numerically-stable helpers shared by the samplers and estimators.

use statrs::function::gamma::ln_gamma;

/// Stable `log(exp(a) + exp(b))`.
#[inline(always)]
pub fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Stable `log sum exp` over a slice.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = xs.iter().map(|&x| (x - hi).exp()).sum();
    hi + s.ln()
}

/// `log C(n, k)` via log-gamma.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    assert!(k <= n);
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Linear interpolation of a uniform-grid function; clamps nothing, the
/// caller guarantees `x` lies inside `[x0, x0 + (values.len()-1) * dx]`.
#[inline]
pub fn lerp_uniform(x0: f64, dx: f64, values: &[f64], x: f64) -> f64 {
    let u = (x - x0) / dx;
    let j = (u.floor() as isize).clamp(0, values.len() as isize - 2) as usize;
    let frac = u - j as f64;
    values[j] * (1.0 - frac) + values[j + 1] * frac
}
