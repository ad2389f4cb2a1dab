//! Numerical laboratory for the narrow-wedge KPZ height function.
//!
//! The crate bundles the constructive pieces needed to probe the height
//! function empirically at desk scale: a directed-polymer sampler under
//! intermediate-disorder scaling, an explicit stochastic-heat-equation
//! solver, exact moment formulas and tail bounds, the exponential
//! composition map between height profiles, H-Brownian-bridge Gibbs
//! resampling with monotone couplings, Barlow-Taylor macroscopic fractal
//! estimators, and the statistical back-end (tail fits, KS machinery,
//! running-extremum tracking) that turns samples into verdicts.

pub mod composition;
pub mod ensemble;
pub mod error;
pub mod fractal;
pub mod moments;
pub mod noise;
pub mod numerics;
pub mod polymer;
pub mod profile;
pub mod she;
pub mod stats;

pub use error::{Error, Result};
