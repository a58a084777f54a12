//! Mather's alpha and beta functions.
//!
//! - [`grid`]: periodic grid potentials and tensor grids of classes.
//! - [`lax_oleinik`]: the discrete min-plus operator and its critical value.
//! - [`tables`]: alpha tabulation, convexification, beta by conjugation,
//!   subderivatives.
//! - [`lp`]: minimizing measures of prescribed rotation by linear programming.
//! - [`aubry`]: calibrated-point estimate of the Aubry set.
//! - [`oracle`]: closed-form and quadrature oracles for the pendulum.

pub mod aubry;
pub mod grid;
pub mod lax_oleinik;
pub mod lp;
pub mod oracle;
pub mod simplex;
pub mod tables;

pub use aubry::{aubry_estimate, default_tol_cal, AubryEstimate};
pub use grid::{GridPotential, TensorGrid};
pub use lax_oleinik::{
    critical_value, critical_value_form, lax_oleinik_apply, CriticalValue, LaxOleinik, ValueIteration,
};
pub use lp::{mather_measure_lp, LpGrid, LpMeasure};
pub use tables::{
    alpha_table, beta_from_alpha, conjugate_back, flat_interval, grid_modulus, subderivative_interval, AlphaTable,
    BetaTable, ConvexTable, Subdifferential,
};
