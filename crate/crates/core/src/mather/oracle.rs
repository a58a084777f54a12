//! Quadrature oracles for the pendulum `H = p^2/2 + cos(2 pi x)` on T^1.
//!
//! Above the separatrix level E = 1 the invariant circles are the graphs
//! `p = +-sqrt(2 (E - cos 2 pi x))`; their class is the mean momentum
//! `c(E)`, and alpha inverts `c(E)`. Below `c(1) = 4/pi` alpha is flat at 1.

use std::f64::consts::{PI, TAU};

use crate::error::{invalid, Result};

/// Half-width of the flat piece of alpha, `c(1) = 4/pi`.
pub const FLAT_HALF_WIDTH: f64 = 4.0 / PI;

/// Number of Simpson subintervals.
pub const SIMPSON_INTERVALS: usize = 10_000;

const BISECTION_TOL: f64 = 1e-14;

fn simpson(f: impl Fn(f64) -> f64) -> f64 {
    let n = SIMPSON_INTERVALS;
    let h = 1.0 / n as f64;
    let mut s = f(0.0) + f(1.0);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(k as f64 * h);
    }
    s * h / 3.0
}

/// Potential of the pendulum.
pub fn pendulum_potential(x: f64) -> f64 {
    (TAU * x).cos()
}

/// Momentum of the upper rotating circle at energy `e >= 1`.
pub fn pendulum_momentum(e: f64, x: f64) -> f64 {
    (2.0 * (e - pendulum_potential(x))).max(0.0).sqrt()
}

/// Mean momentum of the circle at energy `e >= 1`.
pub fn pendulum_class(e: f64) -> Result<f64> {
    if !(e >= 1.0) || !e.is_finite() {
        return Err(invalid(format!("rotating circles need energy E >= 1, got {e}")));
    }
    Ok(simpson(|x| pendulum_momentum(e, x)))
}

/// Time to travel once around the circle at energy `e > 1`.
pub fn pendulum_period(e: f64) -> Result<f64> {
    if !(e > 1.0) || !e.is_finite() {
        return Err(invalid(format!("period needs energy E > 1, got {e}")));
    }
    Ok(simpson(|x| 1.0 / pendulum_momentum(e, x)))
}

/// Energy of the rotating circle of class `|c| >= 4/pi`, by bisection.
pub fn pendulum_energy(c: f64) -> Result<f64> {
    let c = c.abs();
    if !c.is_finite() {
        return Err(invalid("class must be finite"));
    }
    if c <= FLAT_HALF_WIDTH {
        return Ok(1.0);
    }
    let mut lo = 1.0;
    // c(E) >= sqrt(2(E-1)), so this bracket always contains the root
    let mut hi = 1.0 + 0.5 * c * c + 1.0;
    while hi - lo > BISECTION_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if pendulum_class(mid)? < c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Mather's alpha function of the pendulum.
pub fn pendulum_alpha_oracle(c: f64) -> Result<f64> {
    pendulum_energy(c)
}

/// Rotation number `1/T(E)` of the circle of class `c`, signed like `c`.
pub fn pendulum_rotation(c: f64) -> Result<f64> {
    if c.abs() <= FLAT_HALF_WIDTH {
        return Ok(0.0);
    }
    Ok(c.signum() / pendulum_period(pendulum_energy(c)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_piece_values() {
        assert_eq!(pendulum_alpha_oracle(0.0).unwrap(), 1.0);
        assert_eq!(pendulum_alpha_oracle(FLAT_HALF_WIDTH).unwrap(), 1.0);
        assert!((pendulum_class(1.0).unwrap() - FLAT_HALF_WIDTH).abs() < 1e-8);
    }

    #[test]
    fn rotating_value_at_two() {
        let a = pendulum_alpha_oracle(2.0).unwrap();
        assert!((a - 2.063_80).abs() < 1e-4, "{a}");
        assert_eq!(pendulum_alpha_oracle(-2.0).unwrap(), a);
    }

    #[test]
    fn round_trip() {
        for &c in &[1.3, 1.5, 2.0, 3.0, 5.0] {
            let e = pendulum_energy(c).unwrap();
            assert!((pendulum_class(e).unwrap() - c).abs() <= 1e-8);
        }
    }

    #[test]
    fn period_domain() {
        assert!(pendulum_period(0.5).is_err());
        assert!(pendulum_period(1.0).is_err());
        // high energy: T -> 1/sqrt(2E)
        let t = pendulum_period(1e4).unwrap();
        assert!((t * (2e4f64).sqrt() - 1.0).abs() < 1e-4);
    }
}
