//! Gradient-free Bayesian sampling with ensemble score estimates.
//!
//! The library turns draws from a simple Gaussian into draws from an
//! arbitrary unnormalized target density by integrating a reverse diffusion
//! process. The score of the diffused density is never available in closed
//! form; it is estimated by importance-sampling Monte Carlo over the very
//! ensemble of particles being transported, with the proposal refreshed at
//! periodic resampling times. Only pointwise evaluations of the target
//! log-density are required — no gradients.
//!
//! Module map:
//! - [`diffusion`] — forward processes (zero-drift power-law schedule and
//!   Ornstein–Uhlenbeck with a matrix scale), transition-kernel moments,
//!   reverse-SDE and probability-flow drifts.
//! - [`score`] — ensemble-based importance sampling distributions and the
//!   frozen Monte Carlo score estimator (plain, antithetic, mixture).
//! - [`sampler`] — the periodic-resampling reverse integrator.
//! - [`targets`] — reference densities: 2-d toys, multivariate Gaussians,
//!   and a B-spline Bayesian linear regression with analytic posterior.
//! - [`baselines`] — MALA and random-walk Metropolis–Hastings chains.
//! - [`eval`] — energy-distance estimators and sample summaries.

pub mod baselines;
pub mod diffusion;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod rng;
pub mod sampler;
pub mod score;
pub mod targets;

pub use error::{Error, Result};
