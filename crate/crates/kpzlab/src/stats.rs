//! Statistical back-end: tail-exponent fitting, running-extremum tracking,
//! Hölder-exponent estimation, Kolmogorov-Smirnov machinery, and the
//! Paley-Zygmund diagnostic.

use rand::{Rng, SeedableRng};
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::profile::HeightTrajectory;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Closed form `(3/(4 sqrt 2))^{2/3}` of the limsup normalization in gauge
/// `(log log t)^{2/3}`; about 0.6552.
pub fn lil_limsup_constant() -> f64 {
    (3.0 / (4.0 * std::f64::consts::SQRT_2)).powf(2.0 / 3.0)
}

/// Closed form `-6^{1/3}` of the liminf normalization in gauge
/// `(log log t)^{1/3}`; about -1.8171.
pub fn lil_liminf_constant() -> f64 {
    -(6.0f64.cbrt())
}

/// Survival function of the Kolmogorov distribution,
/// `Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64 * lambda).powi(2)).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_effective: f64,
}

fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    // Stephens' finite-sample correction of the asymptotic distribution.
    let sq = n_eff.sqrt();
    kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d)
}

fn sorted_copy(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// One-sample KS test against a callable CDF.
pub fn one_sample_ks<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("empty sample for KS test".into()));
    }
    let xs = sorted_copy(samples);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d
            .max((f - i as f64 / n).abs())
            .max(((i + 1) as f64 / n - f).abs());
    }
    Ok(KsResult {
        statistic: d,
        p_value: ks_p_value(d, n),
        n_effective: n,
    })
}

/// Two-sample KS test with the asymptotic p-value.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("empty sample for KS test".into()));
    }
    let xs = sorted_copy(a);
    let ys = sorted_copy(b);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < n && j < m {
        let t = xs[i].min(ys[j]);
        while i < n && xs[i] <= t {
            i += 1;
        }
        while j < m && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let n_eff = (n * m) as f64 / (n + m) as f64;
    Ok(KsResult {
        statistic: d,
        p_value: ks_p_value(d, n_eff),
        n_effective: n_eff,
    })
}

/// Chi-squared homogeneity test: are the groups drawn from one distribution?
/// Bins are pooled-quantile cells.
pub fn homogeneity_chi2(groups: &[&[f64]], n_bins: usize) -> Result<(f64, f64)> {
    if groups.len() < 2 || groups.iter().any(|g| g.len() < 5 * n_bins) {
        return Err(Error::InsufficientData(
            "homogeneity test needs >=2 groups with >=5 entries per bin".into(),
        ));
    }
    let pooled = sorted_copy(&groups.concat());
    let total = pooled.len();
    let edges: Vec<f64> = (1..n_bins).map(|k| pooled[k * total / n_bins]).collect();
    let bin_of = |x: f64| edges.partition_point(|&e| e < x);
    let g = groups.len();
    let mut counts = vec![0.0f64; g * n_bins];
    for (gi, grp) in groups.iter().enumerate() {
        for &x in grp.iter() {
            counts[gi * n_bins + bin_of(x)] += 1.0;
        }
    }
    let row_tot: Vec<f64> = (0..g)
        .map(|gi| counts[gi * n_bins..(gi + 1) * n_bins].iter().sum())
        .collect();
    let col_tot: Vec<f64> = (0..n_bins)
        .map(|b| (0..g).map(|gi| counts[gi * n_bins + b]).sum())
        .collect();
    let mut stat = 0.0;
    for gi in 0..g {
        for b in 0..n_bins {
            let expect = row_tot[gi] * col_tot[b] / total as f64;
            if expect > 0.0 {
                stat += (counts[gi * n_bins + b] - expect).powi(2) / expect;
            }
        }
    }
    let dof = ((g - 1) * (n_bins - 1)) as f64;
    let chi = ChiSquared::new(dof).map_err(|e| Error::InsufficientData(e.to_string()))?;
    Ok((stat, 1.0 - chi.cdf(stat)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailSide {
    Upper,
    Lower,
}

/// Weighted power-law fit of a survival tail, `-log P ~ c s^p`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailFit {
    pub side: TailSide,
    pub thresholds: Vec<f64>,
    pub log_survival: Vec<f64>,
    pub exponent: f64,
    pub exponent_ci: (f64, f64),
    pub constant: f64,
    pub constant_ci: (f64, f64),
    pub n_samples: usize,
}

/// Most-extreme order statistics excluded from the fit; the empirical
/// log-survival variance explodes there.
const EXTREME_GUARD: usize = 10;
/// Thresholds keep at least this many exceedances.
const MIN_EXCEEDANCES: usize = 30;

fn wls_line(xs: &[f64], ys: &[f64], ws: &[f64]) -> (f64, f64) {
    let sw: f64 = ws.iter().sum();
    let sx: f64 = xs.iter().zip(ws).map(|(x, w)| x * w).sum();
    let sy: f64 = ys.iter().zip(ws).map(|(y, w)| y * w).sum();
    let mx = sx / sw;
    let my = sy / sw;
    let sxx: f64 = xs.iter().zip(ws).map(|(x, w)| w * (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .zip(ws)
        .map(|((x, y), w)| w * (x - mx) * (y - my))
        .sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn bootstrap_rng(samples: &[f64], side: TailSide) -> rand::rngs::StdRng {
    // Deterministic bootstrap seeded from the data themselves.
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &x in samples.iter().take(64) {
        h = (h ^ x.to_bits()).wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^= match side {
        TailSide::Upper => 1,
        TailSide::Lower => 2,
    };
    rand::rngs::StdRng::seed_from_u64(h)
}

/// Fit `-log P(exceed s) = c s^p` by weighted least squares of
/// `log(-log P_hat)` on `log s`, with binomial-variance weights.
///
/// Thresholds are log-spaced over `s_range`; thresholds with fewer than 30
/// exceedances or inside the 10 most extreme order statistics are dropped.
/// Confidence intervals come from a nested-binomial bootstrap of the
/// exceedance counts (threshold estimates are strongly correlated, so
/// per-point normal theory would be too narrow).
pub fn fit_tail(
    samples: &[f64],
    side: TailSide,
    s_range: (f64, f64),
    n_thresholds: usize,
) -> Result<TailFit> {
    if samples.len() < 1000 {
        return Err(Error::InsufficientData(format!(
            "tail fit needs at least 1000 samples, got {}",
            samples.len()
        )));
    }
    let (lo, hi) = s_range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::invalid("s_range", "need 0 < lo < hi"));
    }
    if n_thresholds < 5 {
        return Err(Error::invalid("n_thresholds", "need at least 5 thresholds"));
    }
    // Map to upper-tail exceedances of a sorted array.
    let xs = match side {
        TailSide::Upper => sorted_copy(samples),
        TailSide::Lower => {
            let mut v: Vec<f64> = samples.iter().map(|x| -x).collect();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v
        }
    };
    let n = xs.len();
    let guard = xs[n - 1 - EXTREME_GUARD];
    let ratio = (hi / lo).powf(1.0 / (n_thresholds - 1) as f64);
    let mut thresholds = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    let mut s = lo;
    for _ in 0..n_thresholds {
        if s <= guard {
            let count = n - xs.partition_point(|&x| x < s);
            if count >= MIN_EXCEEDANCES {
                thresholds.push(s);
                counts.push(count);
            }
        }
        s *= ratio;
    }
    if thresholds.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "only {} usable thresholds (need 5): too few exceedances in [{lo}, {hi}]",
            thresholds.len()
        )));
    }

    let fit_counts = |cs: &[usize]| -> (f64, f64) {
        let mut lx = Vec::with_capacity(cs.len());
        let mut ly = Vec::with_capacity(cs.len());
        let mut w = Vec::with_capacity(cs.len());
        for (s, &c) in thresholds.iter().zip(cs) {
            let surv = c as f64 / n as f64;
            lx.push(s.ln());
            ly.push((-surv.ln()).ln());
            // Var(log(-log S)) ~ (1-S) / (N S log^2 S)
            w.push(n as f64 * surv * surv.ln().powi(2) / (1.0 - surv).max(1e-12));
        }
        wls_line(&lx, &ly, &w)
    };

    let (slope, intercept) = fit_counts(&counts);

    // Exceedance sets are nested, so resample the top count binomially and
    // thin sequentially down the thresholds.
    let mut rng = bootstrap_rng(samples, side);
    let boots = 200;
    let mut slopes = Vec::with_capacity(boots);
    let mut intercepts = Vec::with_capacity(boots);
    let deepest = *counts.last().unwrap();
    let order: bool = counts.windows(2).all(|w| w[1] <= w[0]);
    debug_assert!(order && deepest >= 1);
    for _ in 0..boots {
        let mut bc = Vec::with_capacity(counts.len());
        let mut prev_boot = Binomial::new(n as u64, counts[0] as f64 / n as f64)
            .unwrap()
            .sample(&mut rng)
            .max(1);
        bc.push(prev_boot as usize);
        let mut prev_true = counts[0] as f64;
        for &c in counts.iter().skip(1) {
            let b = Binomial::new(prev_boot, (c as f64 / prev_true).min(1.0))
                .unwrap()
                .sample(&mut rng)
                .max(1);
            bc.push(b as usize);
            prev_true = c as f64;
            prev_boot = b;
        }
        let (bs, bi) = fit_counts(&bc);
        slopes.push(bs);
        intercepts.push(bi);
    }
    slopes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    intercepts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo_i = boots * 25 / 1000;
    let hi_i = boots - 1 - lo_i;

    let fit = TailFit {
        side,
        log_survival: counts.iter().map(|&c| (c as f64 / n as f64).ln()).collect(),
        thresholds,
        exponent: slope,
        exponent_ci: (slopes[lo_i], slopes[hi_i]),
        constant: intercept.exp(),
        constant_ci: (intercepts[lo_i].exp(), intercepts[hi_i].exp()),
        n_samples: n,
    };
    if !(fit.exponent > 0.0) {
        return Err(Error::InsufficientData(format!(
            "tail fit produced nonpositive exponent {:.3}",
            fit.exponent
        )));
    }
    Ok(fit)
}

/// Running extrema of the LIL-normalized height along one trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LilTrack {
    pub times: Vec<f64>,
    /// Running max of `h_t / (log log t)^{2/3}`.
    pub running_max: Vec<f64>,
    /// Running min of `h_t / (log log t)^{1/3}`.
    pub running_min: Vec<f64>,
    pub limsup_reference: f64,
    pub liminf_reference: f64,
}

/// Track the running LIL-normalized extrema of a height trajectory.
/// All times must be at least `e^e` so both gauges exceed one.
pub fn track_lil(traj: &HeightTrajectory) -> Result<LilTrack> {
    let times: Vec<f64> = traj.times().collect();
    let t_min = std::f64::consts::E.exp();
    if times.is_empty() || times[0] < t_min * (1.0 - 1e-12) {
        return Err(Error::invalid(
            "trajectory",
            format!("LIL gauges need times >= e^e ~ {t_min:.3}"),
        ));
    }
    // h_{t_scale}(alpha, 0) = alpha^{1/3} h_{alpha t_scale}(1, 0)
    let mut running_max = Vec::with_capacity(times.len());
    let mut running_min = Vec::with_capacity(times.len());
    let (mut cur_max, mut cur_min) = (f64::NEG_INFINITY, f64::INFINITY);
    for ((&t, &alpha), &v) in times.iter().zip(&traj.alphas).zip(&traj.values) {
        let h_t = v / alpha.cbrt();
        let ll = t.ln().ln();
        cur_max = cur_max.max(h_t / ll.powf(2.0 / 3.0));
        cur_min = cur_min.min(h_t / ll.cbrt());
        running_max.push(cur_max);
        running_min.push(cur_min);
    }
    Ok(LilTrack {
        times,
        running_max,
        running_min,
        limsup_reference: lil_limsup_constant(),
        liminf_reference: lil_liminf_constant(),
    })
}

/// Hölder-exponent estimate from replicated equally-spaced series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolderFit {
    pub exponent: f64,
    pub exponent_se: f64,
    pub lags: Vec<f64>,
    pub mean_abs_increment: Vec<f64>,
}

/// Slope of `log E|X(u + lag) - X(u)|` against `log lag`, with the per-lag
/// expectation estimated by a median of replica-batch means (robust against
/// heavy-tailed increments).
pub fn fit_holder(series: &[Vec<f64>], spacing: f64, lags: &[usize]) -> Result<HolderFit> {
    if series.len() < 20 {
        return Err(Error::InsufficientData("need at least 20 replica series".into()));
    }
    if lags.len() < 4 || lags.iter().any(|&l| l == 0) {
        return Err(Error::invalid("lags", "need >= 4 nonzero lags"));
    }
    let len = series[0].len();
    if series.iter().any(|s| s.len() != len) {
        return Err(Error::GridMismatch("replica series lengths differ".into()));
    }
    if lags.iter().any(|&l| l >= len) {
        return Err(Error::invalid("lags", "lag exceeds series length"));
    }
    let n_batches = 10.min(series.len() / 2);
    let per_batch = series.len() / n_batches;
    let mut lag_means = Vec::with_capacity(lags.len());
    for &lag in lags {
        let mut batch_means = Vec::with_capacity(n_batches);
        for b in 0..n_batches {
            let mut acc = 0.0;
            let mut cnt = 0usize;
            for s in &series[b * per_batch..(b + 1) * per_batch] {
                for i in 0..len - lag {
                    acc += (s[i + lag] - s[i]).abs();
                    cnt += 1;
                }
            }
            batch_means.push(acc / cnt as f64);
        }
        batch_means.sort_by(|a, b| a.partial_cmp(b).unwrap());
        lag_means.push(0.5 * (batch_means[n_batches / 2] + batch_means[(n_batches - 1) / 2]));
    }
    let lx: Vec<f64> = lags.iter().map(|&l| (l as f64 * spacing).ln()).collect();
    let ly: Vec<f64> = lag_means.iter().map(|m| m.ln()).collect();
    let ones = vec![1.0; lx.len()];
    let (slope, intercept) = wls_line(&lx, &ly, &ones);
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let rss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let se = (rss / (lx.len() as f64 - 2.0) / sxx).sqrt();
    Ok(HolderFit {
        exponent: slope,
        exponent_se: se,
        lags: lags.iter().map(|&l| l as f64 * spacing).collect(),
        mean_abs_increment: lag_means,
    })
}

/// Empirical check of the Paley-Zygmund inequality
/// `P(X >= delta E X) >= (1-delta)^2 (E X)^2 / E X^2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PzReport {
    pub delta: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub standard_error: f64,
    pub holds: bool,
}

pub fn paley_zygmund(samples: &[f64], delta: f64) -> Result<PzReport> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("empty sample".into()));
    }
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::invalid("delta", "need delta in (0,1)"));
    }
    if samples.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::invalid("samples", "Paley-Zygmund needs positive samples"));
    }
    let n = samples.len() as f64;
    let m1 = samples.iter().sum::<f64>() / n;
    let m2 = samples.iter().map(|x| x * x).sum::<f64>() / n;
    let cut = delta * m1;
    let lhs = samples.iter().filter(|&&x| x >= cut).count() as f64 / n;
    let rhs = (1.0 - delta).powi(2) * m1 * m1 / m2;
    // Monte Carlo error of the comparison: binomial error on lhs plus
    // delta-method error of rhs through (m1, m2).
    let var_lhs = lhs * (1.0 - lhs) / n;
    let var_m1 = (m2 - m1 * m1) / n;
    let m4 = samples.iter().map(|x| x.powi(4)).sum::<f64>() / n;
    let var_m2 = (m4 - m2 * m2) / n;
    let d_rhs_m1 = 2.0 * (1.0 - delta).powi(2) * m1 / m2;
    let d_rhs_m2 = -(1.0 - delta).powi(2) * m1 * m1 / (m2 * m2);
    let var_rhs = d_rhs_m1 * d_rhs_m1 * var_m1 + d_rhs_m2 * d_rhs_m2 * var_m2;
    let se = (var_lhs + var_rhs).sqrt();
    Ok(PzReport {
        delta,
        lhs,
        rhs,
        standard_error: se,
        holds: lhs >= rhs - 3.0 * se,
    })
}

/// Empirical probability of exceeding `s`.
pub fn survival(samples: &[f64], s: f64) -> f64 {
    samples.iter().filter(|&&x| x >= s).count() as f64 / samples.len() as f64
}

/// Inverse-CDF sampler for synthetic tails (test helper).
pub fn synthetic_samples<R: Rng, F: Fn(f64) -> f64>(rng: &mut R, n: usize, icdf: F) -> Vec<f64> {
    (0..n).map(|_| icdf(rng.gen::<f64>())).collect()
}
