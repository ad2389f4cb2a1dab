//! Point-to-point directed polymer partition functions under intermediate
//! disorder scaling.
//!
//! The walk has `n` steps, sites `(i, x)` carry i.i.d. standard normals, and
//! the partition function is `Z_n(x) = E_S[exp(beta * sum_i E(i, S_i)) 1_{S_n = x}]`.
//! Everything runs in the log domain through a forward transfer-matrix
//! recursion with pairwise log-sum-exp, so `beta sqrt(n)` can grow without
//! overflow. The short-time scaled statistic
//! `(pi t/2)^{-1/4} [log sqrt(n pi/2) + log Z_n(0) - n beta^2/2]`
//! is one draw of the scaled height `g` at diffusion time `2 t`: the walk has
//! unit-variance steps, so `n` lattice steps simulate diffusion time `2t`
//! when the inverse temperature is `beta = (t/2n)^{1/4}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{make_environment, LatticeEnvironment, RngStream};
use crate::numerics::{ln_binomial, logaddexp};
use crate::profile::{Regime, SpatialProfile};

/// Paths wandering more than this many sqrt(n) beyond the target window
/// contribute below f64 resolution and are pruned from the recursion.
const ENVELOPE_SIGMAS: f64 = 10.0;

const LN_2: f64 = std::f64::consts::LN_2;

/// Transfer-matrix output for all reachable endpoints.
#[derive(Debug, Clone)]
pub struct PolymerRun {
    n: usize,
    beta: f64,
    /// `log Z_n(x)` for `x = -n + 2j`.
    log_z: Vec<f64>,
    stream: RngStream,
}

impl PolymerRun {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn stream(&self) -> &RngStream {
        &self.stream
    }

    /// `log Z_n(x)`; `-inf` on unreachable endpoints (wrong parity or |x| > n).
    pub fn log_z(&self, x: i64) -> f64 {
        let n = self.n as i64;
        if x.abs() > n || (x - n).rem_euclid(2) != 0 {
            return f64::NEG_INFINITY;
        }
        self.log_z[((x + n) / 2) as usize]
    }

    /// Reachable endpoints in increasing order.
    pub fn endpoints(&self) -> impl Iterator<Item = i64> + '_ {
        let n = self.n as i64;
        (-n..=n).step_by(2)
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::invalid("n", format!("walk length must be even and >= 2, got {n}")));
    }
    Ok(())
}

/// Forward recursion. Row `i` keeps sites `|x| <= w_i`,
/// `w_i = min(i, target_hw + (n - i), target_hw + envelope)` adjusted to the
/// parity of `i`; the two caps drop only sites that either cannot reach the
/// target window or carry negligible mass. `target_hw = n` disables pruning.
/// Returns the final row (`x = -w_n + 2j`) and `w_n`.
fn forward_log_weights(
    env: &LatticeEnvironment,
    n: usize,
    beta: f64,
    target_hw: usize,
) -> (Vec<f64>, usize) {
    let envelope = (ENVELOPE_SIGMAS * (n as f64).sqrt()).ceil() as usize + 2;
    let width = |i: usize| -> usize {
        let cap = (target_hw + (n - i)).min(target_hw + envelope).min(i);
        // match the parity of i
        if (cap + i) % 2 == 0 {
            cap
        } else {
            cap - 1
        }
    };

    let w1 = width(1);
    debug_assert_eq!(w1, 1);
    // Row 1: x in {-1, +1}, each with weight (1/2) e^{beta E}.
    let mut prev: Vec<f64> = vec![
        beta * env.value(1, -1) - LN_2,
        beta * env.value(1, 1) - LN_2,
    ];
    let mut wp = 1usize;

    let mut cur: Vec<f64> = Vec::new();
    for i in 2..=n {
        let w = width(i);
        debug_assert!(w == wp + 1 || w + 1 == wp, "row widths must step by one");
        let m = w + 1; // sites in this row
        cur.clear();
        cur.resize(m, 0.0);
        if w == wp + 1 {
            // growing row: parents of x are at prev indices (j-1, j)
            cur[0] = prev[0];
            cur[w] = prev[wp];
            for (c, pw) in cur[1..w].iter_mut().zip(prev.windows(2)) {
                *c = logaddexp(pw[0], pw[1]);
            }
        } else {
            // shrinking row: parents at prev indices (j, j+1)
            for (c, pw) in cur.iter_mut().zip(prev.windows(2)) {
                *c = logaddexp(pw[0], pw[1]);
            }
        }
        let wi = w as i64;
        if beta != 0.0 {
            for (j, c) in cur.iter_mut().enumerate() {
                let x = -wi + 2 * j as i64;
                *c += beta * env.value(i, x) - LN_2;
            }
        } else {
            for c in cur.iter_mut() {
                *c -= LN_2;
            }
        }
        std::mem::swap(&mut prev, &mut cur);
        wp = w;
    }
    (prev, wp)
}

/// Run the transfer matrix and return `log Z_n(x)` for every endpoint.
pub fn run_polymer(n: usize, beta: f64, stream: &RngStream) -> Result<PolymerRun> {
    check_n(n)?;
    if !(beta >= 0.0) {
        return Err(Error::invalid("beta", format!("need beta >= 0, got {beta}")));
    }
    let env = make_environment(n, stream)?;
    let (row, w) = forward_log_weights(&env, n, beta, n);
    // Pad pruned endpoints (possible when the envelope cap binds) with -inf.
    let n_i = n as i64;
    let mut log_z = vec![f64::NEG_INFINITY; n + 1];
    let wi = w as i64;
    for (j, v) in row.iter().enumerate() {
        let x = -wi + 2 * j as i64;
        log_z[((x + n_i) / 2) as usize] = *v;
    }
    Ok(PolymerRun {
        n,
        beta,
        log_z,
        stream: stream.clone(),
    })
}

/// `log Z_n(0)` only, with the recursion pruned to sites that can still
/// return to the origin. Exact for the pinned endpoint.
pub fn pinned_log_z(n: usize, beta: f64, stream: &RngStream) -> Result<f64> {
    check_n(n)?;
    let env = make_environment(n, stream)?;
    let (row, w) = forward_log_weights(&env, n, beta, 0);
    debug_assert_eq!(w, 0);
    Ok(row[0])
}

/// `log E Z_n(0) = n beta^2 / 2 + log P(S_n = 0)` (annealed normalizer).
pub fn log_mean_pinned_z(n: usize, beta: f64) -> f64 {
    0.5 * n as f64 * beta * beta + ln_binomial(n as u64, n as u64 / 2) - n as f64 * LN_2
}

/// One draw of the short-time scaled statistic.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GSample {
    /// Inverse-temperature parameter: `beta = (t/2n)^{1/4}`.
    pub t: f64,
    /// Diffusion time of the limiting height: `2 t`.
    pub t_diffusion: f64,
    pub n: usize,
    pub beta: f64,
    pub value: f64,
}

/// Centered bracket of the scaled statistic:
/// `log sqrt(n pi/2) + log Z_n(0) - n beta^2/2`.
///
/// The annealed normalizer here is the free-walk factor `e^{n beta^2/2}`;
/// the local-CLT factor `sqrt(n pi/2)` then cancels `P(S_n = 0)` inside
/// `log Z_n(0)` up to a Stirling defect of order `1/n`, leaving an O(1)
/// random variable. (Normalizing by the full pinned mean would count the
/// return probability twice and the bracket would grow like `log n`.)
fn g_bracket(n: usize, log_z: f64, beta: f64) -> f64 {
    0.5 * (n as f64 * std::f64::consts::PI / 2.0).ln() + log_z
        - 0.5 * n as f64 * beta * beta
}

fn g_statistic(t: f64, n: usize, beta: f64, stream: &RngStream) -> Result<f64> {
    let log_z = pinned_log_z(n, beta, stream)?;
    let scale = (std::f64::consts::PI * t / 2.0).powf(0.25);
    Ok(g_bracket(n, log_z, beta) / scale)
}

/// Draw the scaled statistic at inverse-temperature parameter `t`
/// (`beta = (t/2n)^{1/4}`); its weak limit is the short-scaled height at
/// diffusion time `2t`.
pub fn sample_g(t: f64, n: usize, stream: &RngStream) -> Result<GSample> {
    if !(t > 0.0) {
        return Err(Error::invalid("t", format!("need t > 0, got {t}")));
    }
    check_n(n)?;
    let beta = (t / (2.0 * n as f64)).powf(0.25);
    let value = g_statistic(t, n, beta, stream)?;
    if !value.is_finite() {
        return Err(Error::Instability(format!("non-finite g statistic at t={t}, n={n}")));
    }
    Ok(GSample {
        t,
        t_diffusion: 2.0 * t,
        n,
        beta,
        value,
    })
}

/// Same draw addressed by the diffusion time of the target height
/// (`t_diffusion = 2 * t_parameter`); use this when matching against the
/// continuum route.
pub fn sample_g_at_diffusion_time(t_diffusion: f64, n: usize, stream: &RngStream) -> Result<GSample> {
    sample_g(0.5 * t_diffusion, n, stream)
}

/// Independent replicas of `sample_g` across child streams `0..replicas`.
pub fn sample_g_replicas(
    t: f64,
    n: usize,
    replicas: usize,
    stream: &RngStream,
) -> Result<Vec<f64>> {
    (0..replicas)
        .into_par_iter()
        .map(|k| sample_g(t, n, &stream.child(k as u64)).map(|s| s.value))
        .collect()
}

/// Scaled spatial profile of the statistic over lattice-representable
/// endpoints. `half_width` is in the scaled spatial coordinate of the
/// short regime at diffusion time `2t`; endpoint `y` sits at
/// `x = 2 y / sqrt(pi n)`.
pub fn spatial_profile_g(
    t: f64,
    n: usize,
    half_width: f64,
    stream: &RngStream,
) -> Result<SpatialProfile> {
    if !(t > 0.0) {
        return Err(Error::invalid("t", format!("need t > 0, got {t}")));
    }
    check_n(n)?;
    if !(half_width > 0.0) {
        return Err(Error::invalid("half_width", "need a positive half-width"));
    }
    let beta = (t / (2.0 * n as f64)).powf(0.25);
    // lattice endpoint for scaled coordinate x: y = x sqrt(pi n) / 2
    let lattice_per_x = 0.5 * (std::f64::consts::PI * n as f64).sqrt();
    let j_max = (half_width * lattice_per_x / 2.0).ceil() as usize;
    let target_hw = 2 * j_max;
    if target_hw > n {
        return Err(Error::invalid(
            "half_width",
            format!("grid needs lattice half-width {target_hw} > n = {n}"),
        ));
    }
    let env = make_environment(n, stream)?;
    let (row, w) = forward_log_weights(&env, n, beta, target_hw);
    let scale = (std::f64::consts::PI * t / 2.0).powf(0.25);
    let wi = w as i64;
    let offset = ((w - target_hw) / 2) as usize;
    let values: Vec<f64> = (0..=target_hw)
        .map(|j| {
            let v = row[offset + j];
            debug_assert_eq!(-(target_hw as i64) + 2 * j as i64, -wi + 2 * (offset + j) as i64);
            g_bracket(n, v, beta) / scale
        })
        .collect();
    let hw_scaled = target_hw as f64 / lattice_per_x;
    SpatialProfile::new(Regime::Short, 2.0 * t, hw_scaled, values)
}

/// Two-replica overlap: expected coincidence count of two independent walks
/// reweighted by the shared environment and pinned at the origin, relative
/// to the squared partition function.
///
/// Pair-state dynamic programming, O(n^3) time; capped at `n = 600`.
pub fn two_replica_overlap(n: usize, beta: f64, stream: &RngStream) -> Result<f64> {
    check_n(n)?;
    if n > 600 {
        return Err(Error::SizeCap {
            what: "two-replica walk length",
            got: n,
            cap: 600,
        });
    }
    let env = make_environment(n, stream)?;

    // Row widths: both replicas pinned at 0, so |x| <= min(i, n - i).
    let width = |i: usize| -> usize {
        let cap = i.min(n - i);
        if (cap + i) % 2 == 0 {
            cap
        } else {
            cap - 1
        }
    };

    // w = W/(scale), a = A/(scale): joint weight and coincidence accumulator
    // over pair states (x1, x2) = (-w + 2j1, -w + 2j2).
    let mut wp = 1usize;
    let q1 = (beta * env.value(1, -1)).exp();
    let q2 = (beta * env.value(1, 1)).exp();
    let mut w_arr = vec![0.25 * q1 * q1, 0.25 * q1 * q2, 0.25 * q2 * q1, 0.25 * q2 * q2];
    // coincidences at step 1: x1 == x2
    let mut a_arr = vec![w_arr[0], 0.0, 0.0, w_arr[3]];

    let mut q_row: Vec<f64> = Vec::new();
    for i in 2..=n {
        let w = width(i);
        debug_assert!(w == wp + 1 || w + 1 == wp);
        let m = w + 1;
        let mp = wp + 1;
        let growing = w == wp + 1;
        let wi = w as i64;
        q_row.clear();
        q_row.extend((0..m).map(|j| (beta * env.value(i, -wi + 2 * j as i64)).exp()));

        let mut w_new = vec![0.0f64; m * m];
        let mut a_new = vec![0.0f64; m * m];
        let parent = |j: usize| -> (isize, isize) {
            if growing {
                (j as isize - 1, j as isize)
            } else {
                (j as isize, j as isize + 1)
            }
        };
        let mut peak = 0.0f64;
        for j1 in 0..m {
            let (l1, r1) = parent(j1);
            for j2 in 0..m {
                let (l2, r2) = parent(j2);
                let mut sw = 0.0;
                let mut sa = 0.0;
                for &p1 in &[l1, r1] {
                    if p1 < 0 || p1 >= mp as isize {
                        continue;
                    }
                    let row_off = p1 as usize * mp;
                    for &p2 in &[l2, r2] {
                        if p2 < 0 || p2 >= mp as isize {
                            continue;
                        }
                        sw += w_arr[row_off + p2 as usize];
                        sa += a_arr[row_off + p2 as usize];
                    }
                }
                let qq = 0.25 * q_row[j1] * q_row[j2];
                let wv = qq * sw;
                let av = qq * sa + if j1 == j2 { wv } else { 0.0 };
                w_new[j1 * m + j2] = wv;
                a_new[j1 * m + j2] = av;
                if wv > peak {
                    peak = wv;
                }
            }
        }
        // common rescale keeps the ratio A/W while avoiding under/overflow
        if peak > 0.0 && (peak > 1e100 || peak < 1e-100) {
            let inv = 1.0 / peak;
            for v in w_new.iter_mut() {
                *v *= inv;
            }
            for v in a_new.iter_mut() {
                *v *= inv;
            }
        }
        w_arr = w_new;
        a_arr = a_new;
        wp = w;
    }
    debug_assert_eq!(wp, 0);
    if w_arr[0] <= 0.0 || !w_arr[0].is_finite() {
        return Err(Error::Instability(format!(
            "pair partition function degenerated: {}",
            w_arr[0]
        )));
    }
    Ok(a_arr[0] / w_arr[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exhaustive path-sum oracle: enumerate all 2^n walks.
    fn brute_force_log_z(n: usize, beta: f64, stream: &RngStream) -> Vec<(i64, f64)> {
        let env = make_environment(n, stream).unwrap();
        let mut sums = std::collections::BTreeMap::new();
        for mask in 0u64..(1u64 << n) {
            let mut x = 0i64;
            let mut energy = 0.0;
            for i in 1..=n {
                x += if (mask >> (i - 1)) & 1 == 1 { 1 } else { -1 };
                energy += env.value(i, x);
            }
            *sums.entry(x).or_insert(0.0f64) += (beta * energy).exp();
        }
        let norm = 0.5f64.powi(n as i32);
        sums.into_iter().map(|(x, s)| (x, (s * norm).ln())).collect()
    }

    #[test]
    fn rejects_odd_or_tiny_n() {
        let s = RngStream::new(1);
        assert!(run_polymer(3, 0.1, &s).is_err());
        assert!(run_polymer(0, 0.1, &s).is_err());
        assert!(run_polymer(2, -0.5, &s).is_err());
    }

    #[test]
    fn free_walk_matches_binomial() {
        let s = RngStream::new(11);
        let run = run_polymer(2, 0.0, &s).unwrap();
        assert!((run.log_z(0).exp() - 0.5).abs() < 1e-14);
        let run = run_polymer(4, 0.0, &s).unwrap();
        assert!((run.log_z(0).exp() - 0.375).abs() < 1e-14);
        assert!((run.log_z(4).exp() - 1.0 / 16.0).abs() < 1e-14);
        assert_eq!(run.log_z(1), f64::NEG_INFINITY);
        assert_eq!(run.log_z(6), f64::NEG_INFINITY);
    }

    #[test]
    fn transfer_matrix_matches_brute_force() {
        let s = RngStream::new(2024).child(5);
        let n = 6;
        let run = run_polymer(n, 0.3, &s).unwrap();
        for (x, lz) in brute_force_log_z(n, 0.3, &s) {
            assert!(
                (run.log_z(x) - lz).abs() < 1e-10,
                "endpoint {x}: {} vs {lz}",
                run.log_z(x)
            );
        }
    }

    #[test]
    fn pinned_matches_full_run() {
        let s = RngStream::new(7).child(1);
        for &beta in &[0.0, 0.4, 1.1] {
            let full = run_polymer(40, beta, &s).unwrap();
            let pinned = pinned_log_z(40, beta, &s).unwrap();
            assert!((full.log_z(0) - pinned).abs() < 1e-12);
        }
    }

    #[test]
    fn envelope_pruning_is_inert_at_moderate_n() {
        // n = 400: envelope cap 10 sqrt(n) = 200 binds on the full run,
        // yet the pinned value must be unchanged to f64 resolution.
        let s = RngStream::new(31).child(2);
        let full = run_polymer(400, 0.35, &s).unwrap();
        let pinned = pinned_log_z(400, 0.35, &s).unwrap();
        assert!((full.log_z(0) - pinned).abs() < 1e-12);
    }

    #[test]
    fn g_statistic_is_deterministic_and_centered_at_zero_beta() {
        // With beta = 0 the statistic is deterministic and equals the
        // (vanishing) Stirling defect of the centering.
        let s1 = RngStream::new(100).child(1);
        let s2 = RngStream::new(200).child(9);
        let v1 = g_statistic(0.3, 2000, 0.0, &s1).unwrap();
        let v2 = g_statistic(0.3, 2000, 0.0, &s2).unwrap();
        assert_eq!(v1.to_bits(), v2.to_bits());
        assert!(v1.abs() < 1e-3, "centering defect {v1}");
    }

    #[test]
    fn g_sample_records_scaling() {
        let s = RngStream::new(3);
        let g = sample_g(0.2, 100, &s).unwrap();
        assert!((g.beta - (0.2f64 / 200.0).powf(0.25)).abs() < 1e-15);
        assert!((g.t_diffusion - 0.4).abs() < 1e-15);
        let g2 = sample_g_at_diffusion_time(0.4, 100, &s).unwrap();
        assert_eq!(g.value.to_bits(), g2.value.to_bits());
    }

    #[test]
    fn profile_is_deterministic_and_symmetric_at_zero_beta() {
        let s = RngStream::new(555);
        let p1 = spatial_profile_g(0.5, 200, 1.5, &s).unwrap();
        let p2 = spatial_profile_g(0.5, 200, 1.5, &s).unwrap();
        assert_eq!(p1.values().len(), p2.values().len());
        for (a, b) in p1.values().iter().zip(p2.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        // beta = 0 profile equals the scaled log binomial, symmetric in x.
        let n = 200usize;
        let beta0 = 0.0;
        let env = make_environment(n, &s).unwrap();
        let (row, w) = forward_log_weights(&env, n, beta0, 40);
        assert_eq!(w, 40);
        let m = row.len();
        for j in 0..m {
            assert!((row[j] - row[m - 1 - j]).abs() < 1e-12);
            let x = -(w as i64) + 2 * j as i64;
            let expect = ln_binomial(n as u64, ((x + n as i64) / 2) as u64) - n as f64 * LN_2;
            assert!((row[j] - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn profile_rejects_grid_wider_than_walk() {
        let s = RngStream::new(555);
        // n = 20 lattice sites cannot host a +-30-site window.
        assert!(spatial_profile_g(0.5, 20, 60.0, &s).is_err());
    }

    /// Exhaustive pair enumeration oracle for the overlap.
    fn brute_force_overlap(n: usize, beta: f64, stream: &RngStream) -> f64 {
        let env = make_environment(n, stream).unwrap();
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for m1 in 0u64..(1 << n) {
            for m2 in 0u64..(1 << n) {
                let (mut x1, mut x2) = (0i64, 0i64);
                let mut energy = 0.0;
                let mut coincidences = 0.0;
                for i in 1..=n {
                    x1 += if (m1 >> (i - 1)) & 1 == 1 { 1 } else { -1 };
                    x2 += if (m2 >> (i - 1)) & 1 == 1 { 1 } else { -1 };
                    energy += env.value(i, x1) + env.value(i, x2);
                    if x1 == x2 {
                        coincidences += 1.0;
                    }
                }
                if x1 == 0 && x2 == 0 {
                    let w = (beta * energy).exp();
                    num += coincidences * w;
                    den += w;
                }
            }
        }
        num / den
    }

    #[test]
    fn overlap_matches_pair_enumeration() {
        for (n, beta, seed) in [(2usize, 0.0, 21u64), (4, 0.45, 22), (6, 0.8, 23)] {
            let s = RngStream::new(seed);
            let dp = two_replica_overlap(n, beta, &s).unwrap();
            let bf = brute_force_overlap(n, beta, &s);
            assert!((dp - bf).abs() < 1e-10, "n={n} beta={beta}: {dp} vs {bf}");
        }
    }

    #[test]
    fn overlap_rejects_oversize() {
        let s = RngStream::new(1);
        match two_replica_overlap(602, 0.1, &s) {
            Err(Error::SizeCap { cap: 600, .. }) => {}
            other => panic!("expected size cap, got {other:?}"),
        }
    }

    #[test]
    fn overlap_deterministic() {
        let s = RngStream::new(77).child(3);
        let a = two_replica_overlap(100, 0.2, &s).unwrap();
        let b = two_replica_overlap(100, 0.2, &s).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn overlap_stays_bounded_under_intermediate_disorder() {
        // beta ~ n^{-1/4}: overlap / sqrt(n) should show no systematic growth.
        let root = RngStream::new(909);
        let median = |n: usize| -> f64 {
            let mut vals: Vec<f64> = (0..24)
                .map(|k| {
                    let beta = (0.5 / (2.0 * n as f64)).powf(0.25);
                    two_replica_overlap(n, beta, &root.child((n * 1000 + k) as u64)).unwrap()
                        / (n as f64).sqrt()
                })
                .collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            0.5 * (vals[11] + vals[12])
        };
        let m100 = median(100);
        for n in [200usize, 400, 600] {
            let m = median(n);
            assert!(
                m < 4.0 * m100 + 0.5,
                "overlap/sqrt(n) grew: {m} at n={n} vs {m100} at n=100"
            );
        }
    }
}
