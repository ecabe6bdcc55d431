//! Desk-scale laboratory for the geometry of random symmetric polytopes.
//!
//! The library builds polytopes `K = conv{ +-x_1, ..., +-x_N }` from samples
//! of isotropic distributions and measures them: support/gauge/radial
//! functions, quermassintegral proxies, mean widths, projection and section
//! radii, covering numbers and isotropic constants. Everything is driven by
//! explicit RNG substreams so runs are reproducible bit for bit.

#![forbid(unsafe_code)]

pub mod entropy;
pub mod functionals;
pub mod geometry;
pub mod harness;
pub mod isoconst;
pub mod linalg;
pub mod lp;
pub mod measures;
pub mod polytope;
pub mod rng;
pub mod stats;

pub use rng::Stream;
pub use stats::Estimate;
