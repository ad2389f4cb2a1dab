//! Reproducible randomness: splittable counter-based streams, lazily hashed
//! lattice environments, Brownian-bridge and Gaussian heat-kernel primitives.
//!
//! Every sampler in the crate is a pure function of its parameters and an
//! [`RngStream`]. Streams split by path extension, so parallel replicas need
//! no coordination and any run can be reproduced bit-for-bit from
//! `(root_seed, path)`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer; full-avalanche mix of one 64-bit word.
#[inline(always)]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Minimal counter-based generator: the SplitMix64 sequence seeded at `state`.
///
/// Used for per-site draws where constructing a buffered RNG would dominate
/// the cost. Statistical quality is adequate for one-value-per-key use; bulk
/// sequential sampling goes through ChaCha8 instead.
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    #[inline(always)]
    pub fn new(state: u64) -> Self {
        SplitMix64 { state }
    }
}

impl RngCore for SplitMix64 {
    #[inline(always)]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline(always)]
    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        let mut chunks = dest.chunks_exact_mut(8);
        for chunk in &mut chunks {
            chunk.copy_from_slice(&self.next_u64().to_le_bytes());
        }
        let rem = chunks.into_remainder();
        if !rem.is_empty() {
            let bytes = self.next_u64().to_le_bytes();
            rem.copy_from_slice(&bytes[..rem.len()]);
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

/// A splittable random stream addressed by `(root_seed, path)`.
///
/// Identical addresses reproduce identical draws; distinct paths give
/// statistically independent streams. Splitting is free: `child(i)` appends
/// `i` to the path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    root_seed: u64,
    path: Vec<u64>,
}

impl RngStream {
    pub fn new(root_seed: u64) -> Self {
        RngStream {
            root_seed,
            path: Vec::new(),
        }
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// Child stream with `index` appended to the split path.
    pub fn child(&self, index: u64) -> Self {
        let mut path = self.path.clone();
        path.push(index);
        RngStream {
            root_seed: self.root_seed,
            path,
        }
    }

    /// 64-bit key mixing the whole address; the seed of everything below.
    pub fn key(&self) -> u64 {
        let mut k = mix64(self.root_seed ^ 0x517C_C1B7_2722_0A95);
        for &p in &self.path {
            k = mix64(k ^ mix64(p.wrapping_add(GOLDEN)));
        }
        k
    }

    /// Buffered generator for bulk sequential sampling from this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let k = self.key();
        let mut seed = [0u8; 32];
        for (i, chunk) in seed.chunks_exact_mut(8).enumerate() {
            chunk.copy_from_slice(&mix64(k ^ (i as u64).wrapping_mul(GOLDEN)).to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }

    /// Compact `root/path` rendering for provenance headers.
    pub fn address(&self) -> String {
        let mut s = format!("{:#018x}", self.root_seed);
        for p in &self.path {
            s.push('/');
            s.push_str(&p.to_string());
        }
        s
    }
}

/// Seeded i.i.d. standard-normal field on the directed-walk lattice: sites
/// `(i, x)` with `1 <= i <= n_steps`, `|x| <= i`, `x == i (mod 2)`.
///
/// Values are generated lazily from a hash of `(stream key, i, x)`, so a
/// transfer-matrix sweep needs O(1) memory for the disorder and two sweeps
/// with different site subsets still agree on the shared sites.
#[derive(Debug, Clone)]
pub struct LatticeEnvironment {
    n_steps: usize,
    key: u64,
    stream: RngStream,
}

impl LatticeEnvironment {
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn stream(&self) -> &RngStream {
        &self.stream
    }

    pub fn is_site(&self, i: usize, x: i64) -> bool {
        i >= 1 && i <= self.n_steps && x.unsigned_abs() as usize <= i && (x.rem_euclid(2) == (i as i64).rem_euclid(2))
    }

    /// Disorder value at site `(i, x)`.
    #[inline(always)]
    pub fn value(&self, i: usize, x: i64) -> f64 {
        debug_assert!(self.is_site(i, x), "({i},{x}) not an admissible site");
        let s = mix64(self.key ^ mix64((i as u64).wrapping_mul(0xA24B_AED4_963E_E407)) ^ mix64((x as u64).wrapping_mul(0x9FB2_1C65_1E98_DF25)));
        SplitMix64::new(s).sample(StandardNormal)
    }

    /// All admissible sites of row `i`, in increasing `x`.
    pub fn row_sites(&self, i: usize) -> impl Iterator<Item = i64> + '_ {
        let ii = i as i64;
        (-ii..=ii).step_by(2)
    }
}

/// Build the environment for an `n`-step walk. Same stream, same field.
pub fn make_environment(n: usize, stream: &RngStream) -> Result<LatticeEnvironment> {
    if n == 0 {
        return Err(Error::invalid("n", "environment needs n >= 1"));
    }
    Ok(LatticeEnvironment {
        n_steps: n,
        key: stream.key(),
        stream: stream.clone(),
    })
}

/// One sampled Brownian bridge on a uniform grid.
#[derive(Debug, Clone)]
pub struct BridgeSample {
    pub a: f64,
    pub b: f64,
    pub va: f64,
    pub vb: f64,
    /// `m + 1` values; `path[0] == va`, `path[m] == vb`.
    pub path: Vec<f64>,
}

impl BridgeSample {
    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        let m = self.path.len() - 1;
        let (a, b) = (self.a, self.b);
        (0..=m).map(move |k| a + (b - a) * k as f64 / m as f64)
    }
}

/// Exact sequential-conditioning draw of a Brownian bridge on `[a, b]` with
/// endpoint values `(va, vb)` and `m` uniform sub-intervals.
///
/// The finite-dimensional law is exact on the grid for every `m`.
pub fn sample_bridge(
    a: f64,
    b: f64,
    va: f64,
    vb: f64,
    m: usize,
    stream: &RngStream,
) -> Result<BridgeSample> {
    if !(a < b) {
        return Err(Error::invalid("interval", format!("need a < b, got [{a}, {b}]")));
    }
    if m == 0 {
        return Err(Error::invalid("m", "need at least one sub-interval"));
    }
    if !(va.is_finite() && vb.is_finite()) {
        return Err(Error::invalid("endpoints", "endpoint values must be finite"));
    }
    let mut rng = stream.rng();
    let mut path = Vec::with_capacity(m + 1);
    path.push(va);
    let h = (b - a) / m as f64;
    let mut x = va;
    for k in 0..m - 1 {
        // Condition X_{k+1} on (X_k, X_m = vb).
        let remaining = (m - k) as f64 * h;
        let mean = x + (vb - x) * h / remaining;
        let var = h * (remaining - h) / remaining;
        let z: f64 = rng.sample(StandardNormal);
        x = mean + var.sqrt() * z;
        path.push(x);
    }
    path.push(vb);
    Ok(BridgeSample { a, b, va, vb, path })
}

/// Gaussian heat kernel `p(t, x) = (2 pi t)^{-1/2} exp(-x^2 / 2t)`.
pub fn heat_kernel(t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::invalid("t", format!("heat kernel needs t > 0, got {t}")));
    }
    if !x.is_finite() {
        return Err(Error::invalid("x", "needs finite x"));
    }
    Ok((2.0 * std::f64::consts::PI * t).sqrt().recip() * (-x * x / (2.0 * t)).exp())
}

/// `log p(t, x)`; avoids the underflow of `heat_kernel` far in the tails.
pub fn log_heat_kernel(t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::invalid("t", format!("heat kernel needs t > 0, got {t}")));
    }
    Ok(-0.5 * (2.0 * std::f64::consts::PI * t).ln() - x * x / (2.0 * t))
}
