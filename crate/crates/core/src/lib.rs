//! Put pricing under stochastic volatility with three engines: a mixed
//! Monte-Carlo / backward-SPDE method, full two-dimensional Monte-Carlo, and
//! the mixing-solution formula used as a benchmark.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the harness and CLI use.

pub mod analytics;
pub mod brownian;
pub mod error;
pub mod harness;
pub mod model;
pub mod pricers;
pub mod scalar;
pub mod spde;

pub use error::{Error, PriceBound, Result};
pub use pricers::{Method, PricingResult};
pub use scalar::Scalar;
pub use spde::{BoundaryRule, Scheme};

pub type InverseGammaParams = model::InverseGammaParams<f64>;
pub type InverseGammaModel = model::InverseGammaModel<f64>;
pub type TimeGrid = brownian::TimeGrid<f64>;
pub type PathBundle = brownian::PathBundle<f64>;
pub type SpaceGrid = spde::SpaceGrid<f64>;
pub type SpdeSolver = spde::SpdeSolver<f64>;
pub type BsPutInputs = analytics::BsPutInputs<f64>;
