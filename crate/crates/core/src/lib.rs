//! Numerical laboratory for Tonelli Hamiltonian dynamics on T^1 and T^2.
//!
//! The crate computes Mather's alpha function by discrete weak-KAM value
//! iteration, its Fenchel dual beta, minimizing measures by linear
//! programming, rotation vectors and Schwartzman asymptotic cycles of
//! orbits and measures, and checks invariant Lagrangian graphs for
//! invariance, subcriticality, calibration and uniqueness.
//!
//! Module map:
//!
//! - [`geometry`]: torus points, lifts of sampled paths, winding.
//! - [`tonelli`]: Lagrangians, Hamiltonians, Legendre transform.
//! - [`dynamics`]: implicit-midpoint flow, occupation measures.
//! - [`schwartzman`]: rotation vectors and asymptotic cycles.
//! - [`mather`]: alpha/beta tabulation, LP measures, Aubry estimate, oracles.
//! - [`graphs`]: Lagrangian graphs and the uniqueness comparisons.
//! - [`suite`]: the acceptance criteria as runnable checks.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dynamics;
pub mod error;
pub mod exec;
pub mod fmt;
pub mod geometry;
pub mod graphs;
pub mod mather;
pub mod schwartzman;
pub mod suite;
pub mod tonelli;

pub use error::{Error, Result};
pub use exec::Execution;

/// Version string echoed into every result file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
