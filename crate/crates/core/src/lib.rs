//! Excess-over-threshold distributions and maximum entropy.
//!
//! Normalized excesses of heavy-tailed (Fréchet domain) and Weibull-type
//! light-tailed laws approach the Generalized Pareto family, which is also
//! the maximizer of the Tsallis entropy (Shannon at `q = 1`) under a mass
//! and a first-moment constraint. This crate computes both sides and the
//! distance between them:
//!
//! - [`survival`]: catalog of laws on `[0, ∞)` and GPD primitives.
//! - [`functionals`]: semi-infinite quadrature, q-norms, moments, entropies.
//! - [`maxent`]: closed-form maximizer, its inverse, Bregman certificate.
//! - [`excess`]: threshold transform, normalizations, asymptotic predictions.
//! - [`convergence`]: threshold sweeps and a Monte Carlo cross-check.

pub mod convergence;
pub mod error;
pub mod excess;
pub mod functionals;
pub mod maxent;
pub mod rng;
pub mod special;
pub mod survival;

pub use error::{Error, Result};
