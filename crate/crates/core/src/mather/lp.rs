//! Minimizing measures of prescribed rotation vector by linear programming.
//!
//! Unknowns are weights `mu(x_i, v_j)` on a product grid of T^1 x [-v_max, v_max].
//! Closedness of the measure is imposed through the one-step transition
//! `x -> x + v dt` spread onto the two neighboring nodes by linear
//! interpolation: for every node `k`, the mass arriving at `k` equals the
//! mass sitting at `k`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{SpaceTag, WeightedMeasure};
use crate::error::{invalid, Result};
use crate::geometry::wrap_unchecked;
use crate::mather::simplex::minimize;
use crate::tonelli::Lagrangian;

/// Largest number of LP unknowns.
pub const MAX_VARIABLES: usize = 4096;

/// Atoms lighter than this are dropped from the returned measure.
const ATOM_FLOOR: f64 = 1e-12;

/// State grid of the linear program.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpGrid {
    pub n_x: usize,
    pub n_v: usize,
    pub v_max: f64,
}

impl Default for LpGrid {
    fn default() -> Self {
        LpGrid {
            n_x: 32,
            n_v: 33,
            v_max: 2.0,
        }
    }
}

impl LpGrid {
    pub fn velocity(&self, j: usize) -> f64 {
        -self.v_max + 2.0 * self.v_max * j as f64 / (self.n_v - 1) as f64
    }
}

/// Optimal measure and value of the linear program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpMeasure {
    pub measure: WeightedMeasure,
    /// Optimal average action, an approximation of beta(h).
    pub beta: f64,
    pub pivots: usize,
}

/// Solves the occupation-measure LP for rotation vector `h` (dimension one).
pub fn mather_measure_lp<L: Lagrangian + ?Sized>(l: &L, h: &[f64], grid: &LpGrid, dt: f64) -> Result<LpMeasure> {
    if l.dim() != 1 || h.len() != 1 {
        return Err(invalid("the measure LP is restricted to dimension one"));
    }
    if grid.n_x < 2 || grid.n_v < 2 || !(grid.v_max > 0.0) {
        return Err(invalid("LP grid needs n_x, n_v >= 2 and v_max > 0"));
    }
    if grid.n_x * grid.n_v > MAX_VARIABLES {
        return Err(invalid(format!(
            "LP grid has {} unknowns, above the limit {MAX_VARIABLES}",
            grid.n_x * grid.n_v
        )));
    }
    if !(h[0].abs() <= grid.v_max) {
        return Err(invalid(format!("rotation {} outside [-v_max, v_max]", h[0])));
    }
    if !(dt > 0.0) || grid.v_max * dt >= 0.5 {
        return Err(invalid("LP step needs dt > 0 and v_max * dt < 1/2"));
    }
    let (nx, nv) = (grid.n_x, grid.n_v);
    let vars = nx * nv;
    let var = |i: usize, j: usize| i * nv + j;
    let mut cost = vec![0.0; vars];
    // rows: normalization, rotation, then holonomy at nodes 0..nx-1 (last one is redundant)
    let mut rows = vec![vec![0.0; vars]; 2 + nx - 1];
    let mut rhs = vec![0.0; rows.len()];
    rhs[0] = 1.0;
    rhs[1] = h[0];
    for i in 0..nx {
        let x = i as f64 / nx as f64;
        for j in 0..nv {
            let v = grid.velocity(j);
            let k = var(i, j);
            cost[k] = l.lagrangian(&[x], &[v]);
            rows[0][k] = 1.0;
            rows[1][k] = v;
            let s = (x + v * dt) * nx as f64;
            let f = s.floor();
            let t = s - f;
            let lo = (f as i64).rem_euclid(nx as i64) as usize;
            let hi = (lo + 1) % nx;
            if lo < nx - 1 {
                rows[2 + lo][k] += 1.0 - t;
            }
            if hi < nx - 1 {
                rows[2 + hi][k] += t;
            }
            if i < nx - 1 {
                rows[2 + i][k] -= 1.0;
            }
        }
    }
    let sol = minimize(&cost, &rows, &rhs)?;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for i in 0..nx {
        for j in 0..nv {
            let w = sol.x[var(i, j)];
            if w > ATOM_FLOOR {
                points.push((wrap_unchecked(&[i as f64 / nx as f64]), vec![grid.velocity(j)]));
                weights.push(w);
            }
        }
    }
    let measure = WeightedMeasure::new(points, weights, SpaceTag::Tangent)?;
    Ok(LpMeasure {
        measure,
        beta: sol.value,
        pivots: sol.iterations,
    })
}
