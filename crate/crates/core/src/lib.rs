//! Spectral community detection for stochastic block models.
//!
//! The crate has three layers:
//!
//! * model construction and exact population eigen-structure ([`model`]),
//!   reproducible adjacency sampling ([`sampler`]);
//! * the clustering pipeline: leading eigenvectors and subspace alignment
//!   ([`spectral`]), approximate k-means / spherical k-median plus exact
//!   brute-force oracles ([`cluster`]), and permutation-minimized error
//!   criteria ([`metrics`]);
//! * evaluators for the theoretical conditions and error bounds, together
//!   with Monte Carlo concentration studies ([`bounds`]) and a replicate
//!   driver that ties everything together ([`experiment`]).
//!
//! All randomness is counter-based and keyed by explicit seeds, so every
//! result is reproducible bit-for-bit regardless of thread count.

pub mod bounds;
pub mod cluster;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod sampler;
pub mod spectral;

pub use error::{Error, Result};
pub use model::ModelSpec;
pub use sampler::{AdjacencyMatrix, SeedSpec};
