use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("ambiguous lift at sample {index}: coordinate {coord} jumps by {jump} (bound {bound})")]
    AmbiguousLift {
        index: usize,
        coord: usize,
        jump: f64,
        bound: f64,
    },

    #[error("{what} did not converge after {iterations} iterations (last residual {residual:e})")]
    NoConvergence {
        what: String,
        iterations: usize,
        residual: f64,
    },

    #[error("lift condition violated at t={time}: per-step displacement {displacement} >= 0.5")]
    LiftViolation { time: f64, displacement: f64 },

    #[error("invalid step: {0}")]
    InvalidStep(String),

    #[error("point {0} is on the boundary of the tabulation")]
    Extrapolation(String),

    #[error("tabulation is not convex: lower-envelope adjustment {adjustment:e} exceeds {limit:e}")]
    ConvexityViolation { adjustment: f64, limit: f64 },

    #[error("linear program is infeasible: {0}")]
    Infeasible(String),

    #[error("linear program backend failure: {0}")]
    LpError(String),

    #[error("semi-conjugacy violated: defect {defect:e} exceeds {tolerance:e}")]
    SemiconjugacyViolated { defect: f64, tolerance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
