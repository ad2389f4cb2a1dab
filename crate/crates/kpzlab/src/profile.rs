//! Sampled scaled height curves on uniform spatial grids.
//!
//! A [`SpatialProfile`] is one draw of the centered/scaled height field in
//! either the long-time (`h`, 1:2:3) or short-time (`g`, 1:2:4) scaling,
//! together with enough metadata to convert between the two scalings and to
//! recover the raw log-height `H(t, y)` on its physical grid.
//!
//! Long scaling at time `t`:  `h(x) = (H(t, t^{2/3} x) + t/24) / t^{1/3}`.
//! Short scaling at time `t`: `g(x) = (H(t, (pi t/4)^{1/2} x) + log sqrt(2 pi t)) / (pi t/4)^{1/4}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::lerp_uniform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// 1:2:3 scaling, written `h`.
    Long,
    /// 1:2:4 short-time scaling, written `g`.
    Short,
}

impl Regime {
    /// Fluctuation scale of the regime at time `t`.
    pub fn amplitude(self, t: f64) -> f64 {
        match self {
            Regime::Long => t.cbrt(),
            Regime::Short => (std::f64::consts::PI * t / 4.0).powf(0.25),
        }
    }

    /// Spatial scale: scaled coordinate `x` sits at physical `y = space_scale * x`.
    pub fn space_scale(self, t: f64) -> f64 {
        match self {
            Regime::Long => t.powf(2.0 / 3.0),
            Regime::Short => (std::f64::consts::PI * t / 4.0).sqrt(),
        }
    }

    /// Additive centering: `scaled = (H + centering) / amplitude`.
    pub fn centering(self, t: f64) -> f64 {
        match self {
            Regime::Long => t / 24.0,
            Regime::Short => 0.5 * (2.0 * std::f64::consts::PI * t).ln(),
        }
    }

    /// Stationarity parabola of the regime: the one-point law of
    /// `scaled(x) + parabola(x)` does not depend on `x`.
    pub fn parabola(self, t: f64, x: f64) -> f64 {
        match self {
            Regime::Long => 0.5 * x * x,
            Regime::Short => (std::f64::consts::PI * t / 4.0).powf(0.75) * x * x / (2.0 * t),
        }
    }
}

/// One sampled scaled height curve on a uniform symmetric grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpatialProfile {
    regime: Regime,
    /// Physical (diffusion) time of the underlying height.
    t: f64,
    /// Grid half-width in scaled coordinates; nodes at `-hw + j*dx`.
    half_width: f64,
    values: Vec<f64>,
    /// True when the stationarity parabola has been added (profile recentered).
    recentered: bool,
}

impl SpatialProfile {
    pub fn new(regime: Regime, t: f64, half_width: f64, values: Vec<f64>) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::invalid("t", "profile time must be positive"));
        }
        if values.len() < 2 || !(half_width > 0.0) {
            return Err(Error::invalid(
                "grid",
                "need at least two nodes and positive half-width",
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("values", "profile values must be finite"));
        }
        Ok(SpatialProfile {
            regime,
            t,
            half_width,
            values,
            recentered: false,
        })
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn is_recentered(&self) -> bool {
        self.recentered
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / (self.values.len() - 1) as f64
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        let (hw, dx) = (self.half_width, self.dx());
        (0..self.values.len()).map(move |j| -hw + j as f64 * dx)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Profile value at scaled coordinate `x` (linear interpolation).
    pub fn value_at(&self, x: f64) -> Result<f64> {
        if x.abs() > self.half_width * (1.0 + 1e-12) {
            return Err(Error::InsufficientCoverage {
                required: x.abs(),
                available: self.half_width,
            });
        }
        Ok(lerp_uniform(-self.half_width, self.dx(), &self.values, x))
    }

    /// Raw log-height `H(t, y)` at physical coordinate `y`.
    pub fn raw_at(&self, y: f64) -> Result<f64> {
        let s = self.regime.space_scale(self.t);
        let x = y / s;
        let v = self.value_at(x)?;
        let v = if self.recentered {
            v - self.regime.parabola(self.t, x)
        } else {
            v
        };
        Ok(self.regime.amplitude(self.t) * v - self.regime.centering(self.t))
    }

    /// Physical half-width of the grid.
    pub fn physical_half_width(&self) -> f64 {
        self.half_width * self.regime.space_scale(self.t)
    }

    /// Add the stationarity parabola (error if already added).
    pub fn recenter(mut self) -> Result<Self> {
        if self.recentered {
            return Err(Error::invalid("profile", "already recentered"));
        }
        let xs: Vec<f64> = self.xs().collect();
        for (v, x) in self.values.iter_mut().zip(xs) {
            *v += self.regime.parabola(self.t, x);
        }
        self.recentered = true;
        Ok(self)
    }

    /// Re-express the same underlying height in the other regime, resampling
    /// the raw curve onto a uniform grid of `n` nodes covering what the
    /// source grid covers.
    pub fn to_regime(&self, target: Regime, n: usize) -> Result<SpatialProfile> {
        if n < 2 {
            return Err(Error::invalid("n", "need at least two nodes"));
        }
        let y_hw = self.physical_half_width();
        let target_hw = y_hw / target.space_scale(self.t);
        let amp = target.amplitude(self.t);
        let cent = target.centering(self.t);
        let mut values = Vec::with_capacity(n);
        let dx = 2.0 * target_hw / (n - 1) as f64;
        for j in 0..n {
            let x = -target_hw + j as f64 * dx;
            let y = x * target.space_scale(self.t);
            values.push((self.raw_at(y)? + cent) / amp);
        }
        SpatialProfile::new(target, self.t, target_hw, values)
    }
}

/// A coupled temporal sample path of the scaled height at `x = 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeightTrajectory {
    /// Reference time scale `t` of the 1:2:3 transform.
    pub t_scale: f64,
    /// Increasing time multipliers; entry `alpha` carries the height at `alpha * t_scale`.
    pub alphas: Vec<f64>,
    /// `h_{t_scale}(alpha, 0)` per entry.
    pub values: Vec<f64>,
    /// Provenance: RNG stream address of the driving noise.
    pub stream_address: String,
}

impl HeightTrajectory {
    /// Physical times `alpha * t_scale`.
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        let t = self.t_scale;
        self.alphas.iter().map(move |a| a * t)
    }

    /// The algebraic rescaling `h_t(alpha, 0) = alpha^{1/3} h_{alpha t}(1, 0)`:
    /// re-express the trajectory on a different reference scale.
    pub fn rescaled(&self, new_t_scale: f64) -> HeightTrajectory {
        let ratio = self.t_scale / new_t_scale;
        HeightTrajectory {
            t_scale: new_t_scale,
            alphas: self.alphas.iter().map(|a| a * ratio).collect(),
            values: self.values.iter().map(|v| v * ratio.cbrt()).collect(),
            stream_address: self.stream_address.clone(),
        }
    }
}
