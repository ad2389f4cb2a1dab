//! The exponential composition map between scaled height profiles, and the
//! multipoint chain sampler built on it.
//!
//! For two profiles `f, g` the `t`-indexed composition is
//!
//! ```text
//! I_t(f, g) = t^{-1/3} log Int exp(t^{1/3} (f(t^{-2/3} y) + g(-t^{-2/3} y))) dy,
//! ```
//!
//! the log of the exponential convolution of the underlying heights at the
//! origin. With `f` a narrow-wedge profile at time `t` and `g` an independent
//! narrow-wedge profile of the remaining window `delta`, `I_t(f, g)` has the
//! law of the height at time `t + delta` (scaled back to the `t` clock).
//! Iterating over a time grid with fresh independent increment profiles
//! yields a coupled temporal sample.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::RngStream;
use crate::numerics::{logaddexp, logsumexp};
use crate::profile::{Regime, SpatialProfile};
use crate::stats::{two_sample_ks, KsResult, TailFit, TailSide};

/// Mass outside the integration window is held below this fraction of the
/// peak (log-scale margin `log(1e8) + 3`).
const TRUNCATION_LOG_MARGIN: f64 = 21.5;

/// Quadrature controls for the composition integral.
#[derive(Debug, Clone, Copy)]
pub struct ComposeSpec {
    /// Trapezoid nodes across the integration window.
    pub nodes: usize,
    /// Optional hard half-width `L` of the `y` window; `None` selects it
    /// automatically from the integrand's parabolic envelope.
    pub truncation: Option<f64>,
}

impl Default for ComposeSpec {
    fn default() -> Self {
        ComposeSpec {
            nodes: 2001,
            truncation: None,
        }
    }
}

fn integrand_log(f: &SpatialProfile, g: &SpatialProfile, t: f64, u: f64) -> Result<f64> {
    // scaled-argument form: phi(u) = t^{1/3} (f(u) + g(-u)) after y = t^{2/3} u
    Ok(t.cbrt() * (composition_component(f, t, u)? + composition_component(g, t, -u)?))
}

/// Evaluate a profile as the 1:2:3-scaled curve of its own diffusion time on
/// the `t` clock: `(H_p(t^{2/3} x) + t_p/24) / t^{1/3}`.
///
/// Every profile enters the map in this convention regardless of the scaling
/// it was produced in; the `t_p/24` centerings are additive across a
/// composition, so `I_t(f, g)` lands exactly on the scaled height of time
/// `t_f + t_g` with its own centering.
fn composition_component(p: &SpatialProfile, t: f64, u: f64) -> Result<f64> {
    let y = t.powf(2.0 / 3.0) * u;
    Ok((p.raw_at(y)? + p.t() / 24.0) / t.cbrt())
}

/// `I_t(f, g)`: log-sum-exp trapezoid quadrature of the composition integral.
///
/// Both profiles are read as 1:2:3-scaled curves on the `t` clock (their own
/// centerings restored), matching how the chain sampler assembles heights.
pub fn compose(f: &SpatialProfile, g: &SpatialProfile, t: f64, spec: &ComposeSpec) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::invalid("t", "composition needs t > 0"));
    }
    if spec.nodes < 16 {
        return Err(Error::invalid("nodes", "need at least 16 quadrature nodes"));
    }
    let t23 = t.powf(2.0 / 3.0);
    // available u-coverage after argument mapping
    let avail = (f.physical_half_width().min(g.physical_half_width())) / t23;
    let u_max = match spec.truncation {
        Some(l) => {
            let need = l / t23;
            if need > avail * (1.0 + 1e-12) {
                return Err(Error::InsufficientCoverage {
                    required: l,
                    available: avail * t23,
                });
            }
            need
        }
        None => auto_truncation(f, g, t, avail)?,
    };
    let n = spec.nodes;
    let du = 2.0 * u_max / (n - 1) as f64;
    let mut logs = Vec::with_capacity(n);
    for j in 0..n {
        let u = -u_max + j as f64 * du;
        let mut v = integrand_log(f, g, t, u)?;
        if j == 0 || j == n - 1 {
            v -= std::f64::consts::LN_2; // trapezoid end weights
        }
        logs.push(v);
    }
    let log_integral = logsumexp(&logs) + du.ln() + t.powf(2.0 / 3.0).ln();
    Ok(log_integral / t.cbrt())
}

/// Pick the smallest window whose edge integrand sits `TRUNCATION_LOG_MARGIN`
/// below the peak; errors with the required half-width when the profiles
/// cannot cover it.
fn auto_truncation(f: &SpatialProfile, g: &SpatialProfile, t: f64, avail: f64) -> Result<f64> {
    let probe = 257usize;
    let du = 2.0 * avail / (probe - 1) as f64;
    let mut vals = Vec::with_capacity(probe);
    for j in 0..probe {
        let u = -avail + j as f64 * du;
        vals.push(integrand_log(f, g, t, u)?);
    }
    let peak = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let target = peak - TRUNCATION_LOG_MARGIN;
    // widest contiguous window around the peak exceeding the target
    let mut lo = 0usize;
    let mut hi = probe - 1;
    while lo < probe && vals[lo] < target {
        lo += 1;
    }
    while hi > 0 && vals[hi] < target {
        hi -= 1;
    }
    if lo == 0 || hi == probe - 1 {
        // envelope not yet below target at the edges: coverage insufficient
        let have = avail * t.powf(2.0 / 3.0);
        return Err(Error::InsufficientCoverage {
            required: have * 1.5,
            available: have,
        });
    }
    let u_edge = (-avail + hi as f64 * du).abs().max((-avail + lo as f64 * du).abs());
    Ok((u_edge + 2.0 * du).min(avail))
}

/// Spatially extended composition: the composed profile
/// `X -> log Int exp(H_f(Y) + H_g(X - Y)) dY` in raw coordinates, wrapped as
/// a 1:2:3 profile at time `t_out = t_f + t_g`.
///
/// For a fixed output point this reproduces the composition law exactly; as
/// a curve in `X` it treats the increment propagator as shift-invariant,
/// which is the approximation the chain sampler leans on between levels.
pub fn compose_profile(
    f: &SpatialProfile,
    g: &SpatialProfile,
    out_half_width_phys: f64,
    out_nodes: usize,
    quad_nodes: usize,
) -> Result<SpatialProfile> {
    if out_nodes < 3 || quad_nodes < 16 {
        return Err(Error::invalid("nodes", "need >= 3 output and >= 16 quadrature nodes"));
    }
    let t_out = f.t() + g.t();
    let y_f = f.physical_half_width();
    let y_g = g.physical_half_width();
    if out_half_width_phys >= y_g {
        return Err(Error::InsufficientCoverage {
            required: out_half_width_phys,
            available: y_g,
        });
    }
    let n = quad_nodes;
    let dy = 2.0 * y_f / (n - 1) as f64;
    // cache H_f on the quadrature grid
    let hf: Vec<f64> = (0..n)
        .map(|j| f.raw_at(-y_f + j as f64 * dy))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(out_nodes);
    let dx_out = 2.0 * out_half_width_phys / (out_nodes - 1) as f64;
    for k in 0..out_nodes {
        let x_out = -out_half_width_phys + k as f64 * dx_out;
        let mut acc = f64::NEG_INFINITY;
        for (j, &hfj) in hf.iter().enumerate() {
            let y = -y_f + j as f64 * dy;
            let shifted = x_out - y;
            if shifted.abs() > y_g {
                continue;
            }
            let mut v = hfj + g.raw_at(shifted)?;
            if j == 0 || j == n - 1 {
                v -= std::f64::consts::LN_2;
            }
            acc = logaddexp(acc, v);
        }
        if acc == f64::NEG_INFINITY {
            return Err(Error::InsufficientCoverage {
                required: x_out.abs() + y_f,
                available: y_g,
            });
        }
        let h_out = acc + dy.ln();
        out.push((h_out + Regime::Long.centering(t_out)) / Regime::Long.amplitude(t_out));
    }
    SpatialProfile::new(
        Regime::Long,
        t_out,
        out_half_width_phys / Regime::Long.space_scale(t_out),
        out,
    )
}

/// A coupled temporal sample assembled from independent spatial profiles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompositionChain {
    /// Reference time scale of the outputs.
    pub t: f64,
    /// Increasing time multipliers `1 < alpha_1 < ... < alpha_k`.
    pub alphas: Vec<f64>,
    /// `h_t(alpha_i, 0)` built by iterated composition.
    pub outputs: Vec<f64>,
    /// Stream addresses of the profile draws, for reproducibility audits.
    pub profile_addresses: Vec<String>,
}

/// Source of independent narrow-wedge profiles: given a diffusion time and a
/// child stream, produce one draw of the 1:2:3-scaled profile
/// (`h_{t}(1, .)`) covering at least the requested physical half-width.
pub trait ProfileSource {
    fn draw(&self, t: f64, phys_half_width: f64, stream: &RngStream) -> Result<SpatialProfile>;
}

impl<F> ProfileSource for F
where
    F: Fn(f64, f64, &RngStream) -> Result<SpatialProfile>,
{
    fn draw(&self, t: f64, phys_half_width: f64, stream: &RngStream) -> Result<SpatialProfile> {
        self(t, phys_half_width, stream)
    }
}

/// Build a coupled temporal sample of `h_t(alpha_i, 0)` by iterated
/// composition of independent profiles drawn from `source`.
///
/// Each step composes the running profile at time `tau_i` with a fresh
/// independent increment profile at time `tau_{i+1} - tau_i`; stream
/// discipline (child index per level) enforces the independence.
pub fn sample_chain<S: ProfileSource>(
    t: f64,
    alphas: &[f64],
    source: &S,
    stream: &RngStream,
) -> Result<CompositionChain> {
    if !(t > 0.0) {
        return Err(Error::invalid("t", "need t > 0"));
    }
    if alphas.is_empty() || alphas[0] <= 1.0 || alphas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("alphas", "need increasing alphas with alpha_1 > 1"));
    }
    let t_final = t * alphas[alphas.len() - 1];
    // physical window wide enough for every composition along the chain
    let phys_hw = composition_window(t_final);
    let mut addresses = Vec::new();
    let base = source.draw(t, phys_hw * 1.6, &stream.child(0))?;
    addresses.push(stream.child(0).address());
    let mut running = base;
    let mut outputs = Vec::with_capacity(alphas.len());
    let mut tau_prev = t;
    for (i, &alpha) in alphas.iter().enumerate() {
        let tau = alpha * t;
        let delta = tau - tau_prev;
        let incr = source.draw(delta, phys_hw * 1.6, &stream.child(i as u64 + 1))?;
        addresses.push(stream.child(i as u64 + 1).address());
        // value at the origin: exact one-point composition on the tau_prev clock
        // (the map itself reads the increment at the reflected argument)
        let v = compose(&running, &incr, tau_prev, &ComposeSpec::default())?;
        // I_{tau_prev} = h_{tau_prev}(alpha_i/alpha_{i-1}, 0); rescale to the t clock
        outputs.push(v * (tau_prev / t).cbrt());
        if i + 1 < alphas.len() {
            running = compose_profile(&running, &incr, phys_hw, 241, 2401)?;
        }
        tau_prev = tau;
    }
    Ok(CompositionChain {
        t,
        alphas: alphas.to_vec(),
        outputs,
        profile_addresses: addresses,
    })
}

/// Physical half-width needed so the composition integrand's parabolic
/// envelope has decayed by the truncation margin at the window edge.
pub fn composition_window(t_final: f64) -> f64 {
    // integrand ~ exp(-y^2 (1/(2 t_a) + 1/(2 t_b)) + noise): the heaviest
    // case is t_a = t_b = t_final/2, giving exp(-2 y^2 / t_final).
    (TRUNCATION_LOG_MARGIN * t_final / 2.0).sqrt() * 1.6
}

/// Composed-vs-direct increment comparison report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComposeCheckReport {
    pub t: f64,
    pub beta: f64,
    pub n_samples: usize,
    pub ks: KsResult,
    pub upper_fit: Option<TailFit>,
    pub lower_fit: Option<TailFit>,
}

/// Compare composed increments `I_t(f, g) - f(0)` against directly simulated
/// increments `h_t(1 + beta, 0) - h_t(1, 0)`.
pub fn g_compose_check(
    composed: &[f64],
    direct: &[f64],
    t: f64,
    beta: f64,
    fit_range: Option<(f64, f64)>,
) -> Result<ComposeCheckReport> {
    let ks = two_sample_ks(composed, direct)?;
    let (upper_fit, lower_fit) = match fit_range {
        Some(range) => {
            let up = crate::stats::fit_tail(composed, TailSide::Upper, range, 12).ok();
            let lo = crate::stats::fit_tail(composed, TailSide::Lower, range, 12).ok();
            (up, lo)
        }
        None => (None, None),
    };
    Ok(ComposeCheckReport {
        t,
        beta,
        n_samples: composed.len(),
        ks,
        upper_fit,
        lower_fit,
    })
}
