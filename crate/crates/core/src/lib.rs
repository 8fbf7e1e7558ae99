//! Recovery of planar-fault geometry from surface measurements of a
//! half-space potential.
//!
//! The forward map sends a slip density `g` supported on a planar fault
//! `y3 = a*y1 + b*y2 + d` to the potential it induces on a surface patch
//! `V` of the boundary `x3 = 0`. This crate builds that map in a fixed
//! sine basis, probes how stably the fault parameters `(a, b, d)` can be
//! read off from the data, and trains regressors that invert the map from
//! sampled measurements.
//!
//! Modules, bottom up:
//!
//! * [`geometry`]: parameter box, source/observation regions, quadrature
//!   rules, and the sine basis that makes `H^1_0` norms Euclidean.
//! * [`kernel`]: the image-source kernel, its surface gradient, its
//!   parameter derivatives, and the smooth depth cutoff.
//! * [`operator`]: dense assembly of the forward matrix, its SVD, and the
//!   rank-q subspaces the inversion works in.
//! * [`stability`]: randomized Lipschitz-type lower-bound estimates,
//!   quadrature order verification, and local stability constants.
//! * [`dataset`]: deterministic sample generation, noise injection, and
//!   CSV persistence.
//! * [`regressor`]: a small dense MLP trained by scaled conjugate
//!   gradients, nearest-neighbour baselines, and evaluation harness.

pub mod dataset;
pub mod error;
pub mod geometry;
pub mod kernel;
pub mod operator;
pub mod regressor;
pub mod seeding;
pub mod stability;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
