//! The discrete Lax–Oleinik operator and the critical value alpha(c).
//!
//! One step of the operator is
//! `(T u)(x) = min_{x'} u(x') + dt L_eta(mid(x', x), (x - x')/dt)` over grid
//! points within reach `v_max dt` of `x`, with displacements taken as
//! minimal torus lifts. Its additive eigenvalue is `-alpha(c) dt`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::mather::grid::GridPotential;
use crate::tonelli::{verify_tonelli, ClosedOneForm, Lagrangian};

/// Largest admissible time step of the value iteration.
pub const DT_MAX: f64 = 1.0;
/// Smallest admissible resolution per axis.
pub const MIN_RESOLUTION: usize = 16;
/// Largest resolution per axis in dimension two.
pub const MAX_RESOLUTION_2D: usize = 64;

const MAX_TABLE_ENTRIES: usize = 1 << 25;

/// Parameters of the value iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValueIteration {
    /// Grid resolution per axis.
    pub n: usize,
    pub dt: f64,
    /// Largest velocity searched; the reach is `v_max * dt`.
    pub v_max: f64,
    /// Convergence threshold on the oscillation of `(Tu - u)/dt`.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Weight of the previous iterate in `u <- theta u + (1 - theta) T u`.
    pub damping: f64,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for ValueIteration {
    fn default() -> Self {
        ValueIteration {
            n: 256,
            dt: 0.2,
            v_max: 2.5,
            tol: 1e-4,
            max_sweeps: 200_000,
            damping: 0.5,
            exec: Execution::Parallel,
        }
    }
}

impl ValueIteration {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if dim == 0 || dim > 2 {
            return Err(invalid("value iteration supports dimensions 1 and 2"));
        }
        if self.n < MIN_RESOLUTION {
            return Err(invalid(format!(
                "resolution N must be at least {MIN_RESOLUTION}, got {}",
                self.n
            )));
        }
        if dim == 2 && self.n > MAX_RESOLUTION_2D {
            return Err(invalid(format!(
                "resolution N is limited to {MAX_RESOLUTION_2D} in dimension 2"
            )));
        }
        if !(self.dt > 0.0 && self.dt <= DT_MAX) {
            return Err(Error::InvalidStep(format!(
                "dt must lie in (0, {DT_MAX}], got {}",
                self.dt
            )));
        }
        if !(self.v_max > 0.0) || !self.v_max.is_finite() {
            return Err(invalid("v_max must be positive"));
        }
        if self.v_max * self.dt > 0.5 {
            return Err(Error::InvalidStep(format!(
                "reach v_max*dt = {} exceeds half the torus",
                self.v_max * self.dt
            )));
        }
        if self.reach_cells() == 0 {
            return Err(Error::InvalidStep(format!(
                "reach v_max*dt = {} is below one grid cell 1/{}",
                self.v_max * self.dt,
                self.n
            )));
        }
        if !(self.tol > 0.0) || self.max_sweeps == 0 {
            return Err(invalid("tol must be positive and max_sweeps nonzero"));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(invalid("damping must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Reach in grid cells.
    pub fn reach_cells(&self) -> usize {
        (self.v_max * self.dt * self.n as f64 + 1e-9).floor() as usize
    }
}

/// The operator with its one-step costs tabulated.
#[derive(Debug, Clone)]
pub struct LaxOleinik {
    dim: usize,
    n: usize,
    dt: f64,
    offsets: Vec<[i64; 2]>,
    /// `cost[i * offsets.len() + k]`: cost of arriving at node `i` by offset `k`.
    cost: Vec<f64>,
}

impl LaxOleinik {
    pub fn new<L: Lagrangian + ?Sized>(l: &L, eta: &ClosedOneForm, params: &ValueIteration) -> Result<Self> {
        let dim = l.dim();
        params.validate(dim)?;
        if eta.dim() != dim {
            return Err(invalid("one-form and Lagrangian dimensions differ"));
        }
        let n = params.n;
        let r = params.reach_cells() as i64;
        let mut offsets = Vec::new();
        if dim == 1 {
            offsets.extend((-r..=r).map(|d| [d, 0]));
        } else {
            for d1 in -r..=r {
                for d0 in -r..=r {
                    if d0 * d0 + d1 * d1 <= r * r {
                        offsets.push([d0, d1]);
                    }
                }
            }
        }
        let nodes = n.pow(dim as u32);
        let k = offsets.len();
        if nodes * k > MAX_TABLE_ENTRIES {
            return Err(invalid(format!(
                "{} one-step costs exceed the table limit; lower N, dt or v_max",
                nodes * k
            )));
        }
        let grid = GridPotential::zeros(dim, n)?;
        let dt = params.dt;
        let nf = n as f64;
        let rows: Vec<Vec<f64>> = params.exec.map_range(nodes, |i| {
            let x = grid.point(i);
            offsets
                .iter()
                .map(|d| {
                    let v: Vec<f64> = d[..dim].iter().map(|&di| di as f64 / (nf * dt)).collect();
                    let mid: Vec<f64> = x
                        .iter()
                        .zip(&d[..dim])
                        .map(|(xi, &di)| xi - 0.5 * di as f64 / nf)
                        .collect();
                    dt * (l.lagrangian(&mid, &v) - eta.pair(&mid, &v))
                })
                .collect()
        });
        let cost = rows.into_iter().flatten().collect();
        Ok(LaxOleinik {
            dim,
            n,
            dt,
            offsets,
            cost,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn offsets(&self) -> &[[i64; 2]] {
        &self.offsets
    }

    /// Predecessor of node `i` along offset `k`.
    pub fn predecessor(&self, i: usize, k: usize) -> usize {
        let n = self.n as i64;
        let d = self.offsets[k];
        let i0 = (i % self.n) as i64;
        let p0 = (i0 - d[0]).rem_euclid(n) as usize;
        if self.dim == 1 {
            p0
        } else {
            let i1 = (i / self.n) as i64;
            p0 + self.n * (i1 - d[1]).rem_euclid(n) as usize
        }
    }

    /// One-step cost of arriving at node `i` along offset `k`.
    pub fn cost(&self, i: usize, k: usize) -> f64 {
        self.cost[i * self.offsets.len() + k]
    }

    fn best(&self, u: &[f64], i: usize) -> (f64, usize) {
        let mut best = f64::INFINITY;
        let mut arg = usize::MAX;
        for k in 0..self.offsets.len() {
            let p = self.predecessor(i, k);
            let val = u[p] + self.cost(i, k);
            if val < best || (val == best && p < arg) {
                best = val;
                arg = p;
            }
        }
        (best, arg)
    }

    /// Writes `T u` into `out`.
    pub fn apply_into(&self, u: &[f64], out: &mut [f64], exec: Execution) {
        exec.fill(out, |i| self.best(u, i).0);
    }

    pub fn apply(&self, u: &GridPotential, exec: Execution) -> Result<GridPotential> {
        self.check(u)?;
        let mut out = vec![0.0; u.len()];
        self.apply_into(u.values(), &mut out, exec);
        GridPotential::new(self.dim, self.n, out)
    }

    /// `T u` together with the minimizing predecessor of every node
    /// (lowest grid index on ties).
    pub fn apply_with_argmin(&self, u: &GridPotential, exec: Execution) -> Result<(GridPotential, Vec<usize>)> {
        self.check(u)?;
        let pairs = exec.map_range(u.len(), |i| self.best(u.values(), i));
        let (vals, args) = pairs.into_iter().unzip();
        Ok((GridPotential::new(self.dim, self.n, vals)?, args))
    }

    fn check(&self, u: &GridPotential) -> Result<()> {
        if u.dim() != self.dim || u.resolution() != self.n {
            return Err(invalid("potential grid does not match the operator"));
        }
        Ok(())
    }
}

/// One application of the operator, building the cost table on the fly.
pub fn lax_oleinik_apply<L: Lagrangian + ?Sized>(
    u: &GridPotential,
    l: &L,
    eta: &ClosedOneForm,
    dt: f64,
    v_max: f64,
) -> Result<GridPotential> {
    let params = ValueIteration {
        n: u.resolution(),
        dt,
        v_max,
        ..ValueIteration::default()
    };
    LaxOleinik::new(l, eta, &params)?.apply(u, params.exec)
}

/// Result of the value iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValue {
    pub alpha: f64,
    /// Approximate fixed point, normalized to `max u = 0`.
    pub potential: GridPotential,
    /// Oscillation of `(T u - u)/dt` at termination.
    pub residual: f64,
    pub sweeps: usize,
}

/// Critical value for the constant class `c`.
pub fn critical_value<L: Lagrangian + ?Sized>(l: &L, c: &[f64], params: &ValueIteration) -> Result<CriticalValue> {
    critical_value_form(l, &ClosedOneForm::constant(c), params)
}

/// Critical value for an arbitrary closed one-form.
pub fn critical_value_form<L: Lagrangian + ?Sized>(
    l: &L,
    eta: &ClosedOneForm,
    params: &ValueIteration,
) -> Result<CriticalValue> {
    let report = verify_tonelli(l, 50, 0);
    if !report.passed {
        return Err(invalid(format!(
            "Lagrangian is not Tonelli: {}",
            report.failures.join("; ")
        )));
    }
    let op = LaxOleinik::new(l, eta, params)?;
    iterate(&op, params)
}

/// Runs the damped iteration on a prebuilt operator.
pub fn iterate(op: &LaxOleinik, params: &ValueIteration) -> Result<CriticalValue> {
    let len = op.n.pow(op.dim as u32);
    let mut u = vec![0.0; len];
    let mut tu = vec![0.0; len];
    let theta = params.damping;
    let mut residual = f64::INFINITY;
    for sweep in 1..=params.max_sweeps {
        op.apply_into(&u, &mut tu, params.exec);
        let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for (a, b) in tu.iter().zip(&u) {
            let d = (a - b) / op.dt;
            lo = lo.min(d);
            hi = hi.max(d);
            sum += d;
        }
        residual = hi - lo;
        if !residual.is_finite() {
            break;
        }
        if residual < params.tol {
            return Ok(CriticalValue {
                alpha: -sum / len as f64,
                potential: GridPotential::new(op.dim, op.n, u)?,
                residual,
                sweeps: sweep,
            });
        }
        for (a, b) in u.iter_mut().zip(&tu) {
            *a = theta * *a + (1.0 - theta) * b;
        }
        let top = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        u.iter_mut().for_each(|a| *a -= top);
    }
    Err(Error::NoConvergence {
        what: "value iteration".into(),
        iterations: params.max_sweeps,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mather::oracle::pendulum_alpha_oracle;
    use crate::tonelli::MechanicalModel;
    use proptest::prelude::*;

    fn params(n: usize, dt: f64, v_max: f64) -> ValueIteration {
        ValueIteration {
            n,
            dt,
            v_max,
            ..ValueIteration::default()
        }
    }

    #[test]
    fn free_particle_fixes_zero() {
        let l = MechanicalModel::integrable(1).unwrap();
        let u = GridPotential::zeros(1, 64).unwrap();
        let tu = lax_oleinik_apply(&u, &l, &ClosedOneForm::constant(&[0.0]), 0.2, 2.5).unwrap();
        assert!(tu.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reach_beyond_half_torus_rejected() {
        let l = MechanicalModel::integrable(1).unwrap();
        let u = GridPotential::zeros(1, 64).unwrap();
        let err = lax_oleinik_apply(&u, &l, &ClosedOneForm::constant(&[0.0]), 0.2, 3.0).unwrap_err();
        assert!(matches!(err, Error::InvalidStep(_)));
        assert!(matches!(params(8, 0.2, 1.0).validate(1), Err(Error::InvalidInput(_))));
        assert!(matches!(params(64, 0.0, 1.0).validate(1), Err(Error::InvalidStep(_))));
    }

    #[test]
    fn integrable_alpha_is_half_square() {
        let l = MechanicalModel::integrable(1).unwrap();
        let cv = critical_value(&l, &[0.8], &ValueIteration::default()).unwrap();
        assert!((cv.alpha - 0.32).abs() <= 5e-3, "{}", cv.alpha);
        assert!(cv.residual <= 1e-4);
    }

    #[test]
    fn pendulum_alpha_matches_oracle() {
        let l = MechanicalModel::pendulum(1.0).unwrap();
        let p = params(256, 0.05, 3.0);
        let a0 = critical_value(&l, &[0.0], &p).unwrap();
        assert!((a0.alpha - 1.0).abs() <= 1e-2, "{}", a0.alpha);
        let a2 = critical_value(&l, &[2.0], &p).unwrap();
        let oracle = pendulum_alpha_oracle(2.0).unwrap();
        assert!((a2.alpha - oracle).abs() <= 1e-2, "{} vs {oracle}", a2.alpha);
    }

    #[test]
    fn weaker_potential_lowers_alpha() {
        let strong = MechanicalModel::pendulum(1.0).unwrap();
        let weak = MechanicalModel::pendulum(0.5).unwrap();
        let p = params(128, 0.1, 3.0);
        for c in [0.0, 2.0] {
            let a = critical_value(&strong, &[c], &p).unwrap().alpha;
            let b = critical_value(&weak, &[c], &p).unwrap().alpha;
            assert!(b < a, "c={c}: {b} !< {a}");
        }
    }

    #[test]
    fn undamped_variant_still_available() {
        let l = MechanicalModel::integrable(1).unwrap();
        let p = ValueIteration {
            damping: 0.0,
            ..params(64, 0.2, 2.5)
        };
        let cv = critical_value(&l, &[0.25], &p).unwrap();
        assert!((cv.alpha - 0.03125).abs() < 5e-3);
    }

    #[test]
    fn two_dimensional_integrable() {
        let l = MechanicalModel::integrable(2).unwrap();
        let p = params(16, 0.25, 2.0);
        let cv = critical_value(&l, &[0.5, -0.25], &p).unwrap();
        assert!((cv.alpha - 0.15625).abs() < 1e-2, "{}", cv.alpha);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let l = MechanicalModel::pendulum(1.0).unwrap();
        let mut p = params(64, 0.1, 3.0);
        let a = critical_value(&l, &[1.5], &p).unwrap();
        p.exec = Execution::Sequential;
        let b = critical_value(&l, &[1.5], &p).unwrap();
        assert_eq!(a, b);
    }

    fn op() -> LaxOleinik {
        let l = MechanicalModel::pendulum(1.0).unwrap();
        LaxOleinik::new(&l, &ClosedOneForm::constant(&[0.7]), &params(32, 0.1, 3.0)).unwrap()
    }

    proptest! {
        #[test]
        fn commutes_with_constants(vals in prop::collection::vec(-2.0f64..2.0, 32), k in -5.0f64..5.0) {
            let t = op();
            let u = GridPotential::new(1, 32, vals.clone()).unwrap();
            let mut uk = u.clone();
            uk.shift(k);
            let a = t.apply(&u, Execution::Sequential).unwrap();
            let b = t.apply(&uk, Execution::Sequential).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!((x + k - y).abs() <= 1e-12 * (1.0 + k.abs()));
            }
        }

        #[test]
        fn monotone_and_nonexpansive(
            vals in prop::collection::vec(-2.0f64..2.0, 32),
            bumps in prop::collection::vec(0.0f64..1.0, 32),
        ) {
            let t = op();
            let u = GridPotential::new(1, 32, vals.clone()).unwrap();
            let w = GridPotential::new(1, 32, vals.iter().zip(&bumps).map(|(a, b)| a + b).collect()).unwrap();
            let tu = t.apply(&u, Execution::Sequential).unwrap();
            let tw = t.apply(&w, Execution::Sequential).unwrap();
            for (a, b) in tu.values().iter().zip(tw.values()) {
                prop_assert!(a <= b);
            }
            prop_assert!(tu.sup_distance(&tw) <= u.sup_distance(&w) + 1e-12);
        }
    }
}
