//! Rotation vectors and Schwartzman asymptotic cycles.
//!
//! On T^n every cohomology class has a constant representative, so cycles
//! are vectors of R^n = H_1(T^n; R) obtained by pairing with the basis forms
//! `dx_i`. Two routes are provided: the measure formula
//! `S(mu)([eta]) = int i_X eta dmu` and the long-time winding of a lifted
//! orbit. They must agree on ergodic measures, which the tests exploit.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate_with, IntegratorOptions, SpaceTag, WeightedMeasure};
use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::geometry::{torus_distance, winding_estimate, wrap, wrap_unchecked, LiftedPath, TorusPoint};
use crate::tonelli::{ClosedOneForm, Hamiltonian};

type FieldFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// A continuous vector field on T^n.
#[derive(Clone)]
pub struct FlowField {
    name: String,
    dim: usize,
    field: Arc<FieldFn>,
}

impl std::fmt::Debug for FlowField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FlowField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish()
    }
}

impl FlowField {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        field: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        FlowField {
            name: name.into(),
            dim,
            field: Arc::new(field),
        }
    }

    /// The constant field `X = alpha`, whose flow is a translation.
    pub fn linear(alpha: &[f64]) -> Self {
        let a = alpha.to_vec();
        FlowField::new("linear", alpha.len(), move |_| a.clone())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.field)(x)
    }
}

/// Integrates `dx/dt = X(x)` with classical RK4 and returns the lifted orbit.
pub fn flow_orbit(field: &FlowField, x0: &TorusPoint, duration: f64, dt: f64) -> Result<LiftedPath> {
    if x0.dim() != field.dim() {
        return Err(invalid("start point has wrong dimension"));
    }
    if !(dt > 0.0) || !(duration >= dt) {
        return Err(invalid("need dt > 0 and duration >= dt"));
    }
    let steps = (duration / dt).round() as usize;
    let mut x = x0.coords().to_vec();
    let mut times = Vec::with_capacity(steps + 1);
    let mut points = Vec::with_capacity(steps + 1);
    times.push(0.0);
    points.push(x.clone());
    let axpy = |x: &[f64], k: &[f64], h: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + h * b).collect() };
    for s in 1..=steps {
        let k1 = field.eval(&x);
        let k2 = field.eval(&axpy(&x, &k1, 0.5 * dt));
        let k3 = field.eval(&axpy(&x, &k2, 0.5 * dt));
        let k4 = field.eval(&axpy(&x, &k3, dt));
        let next: Vec<f64> = (0..x.len())
            .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        if let Some(d) = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).find(|d| !(*d < 0.5)) {
            return Err(Error::LiftViolation {
                time: s as f64 * dt,
                displacement: d,
            });
        }
        x = next;
        times.push(s as f64 * dt);
        points.push(x.clone());
    }
    LiftedPath::from_lifted(times, points)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleMethod {
    MeasureFormula,
    TrajectoryLimit,
}

/// An element of H_1(T^n; R) = R^n with a heuristic error bar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticCycle {
    pub value: Vec<f64>,
    pub method: CycleMethod,
    /// Heuristic: for trajectory limits, the difference of the two half-window estimates.
    pub error_bar: f64,
    pub window: Option<f64>,
}

impl AsymptoticCycle {
    fn exact(value: Vec<f64>) -> Self {
        AsymptoticCycle {
            value,
            method: CycleMethod::MeasureFormula,
            error_bar: 0.0,
            window: None,
        }
    }

    pub fn distance(&self, other: &AsymptoticCycle) -> f64 {
        self.value
            .iter()
            .zip(&other.value)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Rotation vector `rho_i = sum_k w_k (v_k)_i` of a measure on TM.
pub fn rotation_vector(mu: &WeightedMeasure) -> Result<AsymptoticCycle> {
    if mu.space() != SpaceTag::Tangent {
        return Err(invalid("rotation vector needs a measure on TM"));
    }
    let mut rho = vec![0.0; mu.dim()];
    for atom in mu.atoms() {
        for (r, v) in rho.iter_mut().zip(&atom.fiber) {
            *r += atom.weight * v;
        }
    }
    Ok(AsymptoticCycle::exact(rho))
}

/// `S(mu)` against the basis forms `dx_i`: component i is `sum_k w_k X(x_k)_i`.
/// Only the base points of `mu` are used.
pub fn cycle_from_flow_measure(field: &FlowField, mu: &WeightedMeasure) -> Result<AsymptoticCycle> {
    if mu.dim() != field.dim() {
        return Err(invalid("measure and field dimensions differ"));
    }
    let mut s = vec![0.0; field.dim()];
    for atom in mu.atoms() {
        for (si, xi) in s.iter_mut().zip(field.eval(atom.x.coords())) {
            *si += atom.weight * xi;
        }
    }
    Ok(AsymptoticCycle::exact(s))
}

/// `int i_X eta dmu` for a closed one-form `eta`.
pub fn form_integral(field: &FlowField, mu: &WeightedMeasure, eta: &ClosedOneForm) -> f64 {
    mu.integrate(|x, _| eta.pair(x, &field.eval(x)))
}

/// `int <eta(x), v> dmu` for a measure on TM.
pub fn form_integral_tangent(mu: &WeightedMeasure, eta: &ClosedOneForm) -> Result<f64> {
    if mu.space() != SpaceTag::Tangent {
        return Err(invalid("pairing with velocities needs a measure on TM"));
    }
    Ok(mu.integrate(|x, v| eta.pair(x, v)))
}

/// Winding of the orbit over `[t0, t0 + window]`, with the half-window
/// difference as error bar.
pub fn cycle_from_trajectory(path: &LiftedPath, window: f64) -> Result<AsymptoticCycle> {
    let total = path.duration();
    if !(window > 0.0) || window > total * (1.0 + 1e-12) {
        return Err(invalid(format!("window {window} must lie in (0, {total}]")));
    }
    let t0 = path.times()[0];
    let seg = path.window(t0, window);
    let value = winding_estimate(&seg)?;
    let half = 0.5 * window;
    let first = path.window(t0, half);
    let second = path.window(t0 + half, half);
    let error_bar = if first.len() > 1 && second.len() > 1 {
        let (a, b) = (winding_estimate(&first)?, winding_estimate(&second)?);
        a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    } else {
        0.0
    };
    Ok(AsymptoticCycle {
        value,
        method: CycleMethod::TrajectoryLimit,
        error_bar,
        window: Some(seg.duration()),
    })
}

/// A continuous map T^n -> T^m given by a lift `F: R^n -> R^m` with
/// `F(x + k) = F(x) + M k`; `M` is the induced map on first homology.
#[derive(Clone)]
pub struct TorusMap {
    homology: Vec<Vec<i64>>,
    lift: Arc<FieldFn>,
}

impl std::fmt::Debug for TorusMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TorusMap").field("homology", &self.homology).finish()
    }
}

impl TorusMap {
    pub fn new(homology: Vec<Vec<i64>>, lift: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        TorusMap {
            homology,
            lift: Arc::new(lift),
        }
    }

    /// `x -> M x + b`.
    pub fn affine(matrix: Vec<Vec<i64>>, offset: Vec<f64>) -> Self {
        let m = matrix.clone();
        TorusMap::new(matrix, move |x| {
            m.iter()
                .zip(&offset)
                .map(|(row, b)| row.iter().zip(x).map(|(a, xi)| *a as f64 * xi).sum::<f64>() + b)
                .collect()
        })
    }

    pub fn identity(dim: usize) -> Self {
        let m = (0..dim)
            .map(|i| (0..dim).map(|j| i64::from(i == j)).collect())
            .collect();
        TorusMap::affine(m, vec![0.0; dim])
    }

    /// Collapses T^n onto one point of T^m; induces zero on homology.
    pub fn constant(source_dim: usize, point: &TorusPoint) -> Self {
        let p = point.coords().to_vec();
        TorusMap::new(vec![vec![0; source_dim]; p.len()], move |_| p.clone())
    }

    pub fn homology(&self) -> &[Vec<i64>] {
        &self.homology
    }

    pub fn lift(&self, x: &[f64]) -> Vec<f64> {
        (self.lift)(x)
    }

    pub fn apply(&self, x: &TorusPoint) -> TorusPoint {
        wrap_unchecked(&self.lift(x.coords()))
    }

    pub fn act_on_homology(&self, h: &[f64]) -> Vec<f64> {
        self.homology
            .iter()
            .map(|row| row.iter().zip(h).map(|(a, b)| *a as f64 * b).sum())
            .collect()
    }

    pub fn push_forward(&self, mu: &WeightedMeasure) -> Result<WeightedMeasure> {
        let points = mu.atoms().iter().map(|a| (self.apply(&a.x), Vec::new())).collect();
        let weights = mu.atoms().iter().map(|a| a.weight).collect();
        WeightedMeasure::new(points, weights, SpaceTag::Base)
    }

    /// Image of a lifted path under the lift `F`.
    pub fn push_path(&self, path: &LiftedPath) -> Result<LiftedPath> {
        LiftedPath::from_lifted(
            path.times().to_vec(),
            path.points().iter().map(|p| self.lift(p)).collect(),
        )
    }
}

/// Sampling of the semi-conjugacy identity `psi . phi1_t = phi2_t . psi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiconjugacyCheck {
    pub times: Vec<f64>,
    pub samples: usize,
    pub dt: f64,
    pub tol: f64,
}

impl Default for SemiconjugacyCheck {
    fn default() -> Self {
        SemiconjugacyCheck {
            times: vec![0.25, 1.0],
            samples: 32,
            dt: 1e-3,
            tol: 1e-6,
        }
    }
}

/// Largest sampled violation of `psi(phi1_t(x)) = phi2_t(psi(x))` over atoms of `mu`.
pub fn semiconjugacy_defect(
    psi: &TorusMap,
    mu: &WeightedMeasure,
    flow1: &FlowField,
    flow2: &FlowField,
    check: &SemiconjugacyCheck,
) -> Result<f64> {
    let atoms = mu.atoms();
    let stride = (atoms.len() / check.samples.max(1)).max(1);
    let mut worst: f64 = 0.0;
    for atom in atoms.iter().step_by(stride) {
        for &t in &check.times {
            let o1 = flow_orbit(flow1, &atom.x, t, (t / (t / check.dt).ceil()).min(t))?;
            let left = psi.apply(&wrap(o1.points().last().expect("nonempty orbit"))?);
            let start2 = psi.apply(&atom.x);
            let o2 = flow_orbit(flow2, &start2, t, (t / (t / check.dt).ceil()).min(t))?;
            let right = wrap(o2.points().last().expect("nonempty orbit"))?;
            worst = worst.max(torus_distance(left.coords(), right.coords()));
        }
    }
    Ok(worst)
}

/// Both sides of `S(psi_* mu, phi2) = H_1(psi) S(mu, phi1)` by the measure formula.
pub fn pushforward_cycle(
    psi: &TorusMap,
    mu: &WeightedMeasure,
    flow1: &FlowField,
    flow2: &FlowField,
    check: &SemiconjugacyCheck,
) -> Result<(AsymptoticCycle, AsymptoticCycle)> {
    let defect = semiconjugacy_defect(psi, mu, flow1, flow2, check)?;
    if !(defect <= check.tol) {
        return Err(Error::SemiconjugacyViolated {
            defect,
            tolerance: check.tol,
        });
    }
    let left = cycle_from_flow_measure(flow2, &psi.push_forward(mu)?)?;
    let right = cycle_from_flow_measure(flow1, mu)?;
    Ok((left, AsymptoticCycle::exact(psi.act_on_homology(&right.value))))
}

/// Both sides of the identity by the trajectory route: the cycle of the image
/// orbit under `phi2` against `H_1(psi)` applied to the cycle of the orbit.
pub fn pushforward_cycle_along_orbit(
    psi: &TorusMap,
    orbit: &LiftedPath,
    window: f64,
) -> Result<(AsymptoticCycle, AsymptoticCycle)> {
    let left = cycle_from_trajectory(&psi.push_path(orbit)?, window)?;
    let right = cycle_from_trajectory(orbit, window)?;
    let scale = psi
        .homology()
        .iter()
        .map(|row| row.iter().map(|a| a.abs() as f64).sum::<f64>())
        .fold(0.0, f64::max);
    Ok((
        left,
        AsymptoticCycle {
            value: psi.act_on_homology(&right.value),
            method: CycleMethod::TrajectoryLimit,
            error_bar: scale * right.error_bar,
            window: right.window,
        },
    ))
}

/// Spread of an ensemble of cycles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiameterReport {
    pub diameter: f64,
    pub members: usize,
    pub max_error_bar: f64,
    /// Diameter within `2 max_error_bar + tol`: all sampled measures share one cycle.
    pub uniquely_ergodic_sampled: bool,
}

/// Maximum pairwise distance between the cycles of an ensemble.
pub fn schwartzman_diameter(cycles: &[AsymptoticCycle], tol: f64) -> Result<DiameterReport> {
    if cycles.is_empty() {
        return Err(invalid("empty ensemble"));
    }
    let mut diameter: f64 = 0.0;
    for (i, a) in cycles.iter().enumerate() {
        for b in &cycles[i + 1..] {
            diameter = diameter.max(a.distance(b));
        }
    }
    let max_error_bar = cycles.iter().map(|c| c.error_bar).fold(0.0, f64::max);
    Ok(DiameterReport {
        diameter,
        members: cycles.len(),
        max_error_bar,
        uniquely_ergodic_sampled: diameter <= 2.0 * max_error_bar + tol,
    })
}

/// Trajectory cycles of a flow from `starts` uniformly random initial points.
pub fn flow_ensemble(
    field: &FlowField,
    starts: usize,
    window: f64,
    dt: f64,
    seed: u64,
    exec: Execution,
) -> Result<Vec<AsymptoticCycle>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<TorusPoint> = (0..starts)
        .map(|_| wrap_unchecked(&(0..field.dim()).map(|_| rng.random::<f64>()).collect::<Vec<_>>()))
        .collect();
    exec.map_slice(&points, |x0| {
        cycle_from_trajectory(&flow_orbit(field, x0, window, dt)?, window)
    })
    .into_iter()
    .collect()
}

/// Initial conditions and resolution of a Hamiltonian ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    /// Base points per axis.
    pub positions: usize,
    /// Momentum levels per axis, spread evenly over `[-p_max, p_max]`.
    pub momenta: usize,
    pub p_max: f64,
    pub window: f64,
    pub dt: f64,
    /// Grid per axis used to locate equilibria.
    pub equilibrium_grid: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            positions: 4,
            momenta: 7,
            p_max: 3.0,
            window: 50.0,
            dt: 5e-3,
            equilibrium_grid: 32,
        }
    }
}

fn fiber_minimizer<H: Hamiltonian + ?Sized>(h: &H, x: &[f64]) -> Option<Vec<f64>> {
    let n = x.len();
    let mut p = vec![0.0; n];
    for _ in 0..50 {
        let g = h.dh_dp(x, &p);
        if g.iter().all(|v| v.abs() < 1e-13) {
            return Some(p);
        }
        let step = h.d2h_dp2(x, &p).lu().solve(&nalgebra::DVector::from_column_slice(&g))?;
        for i in 0..n {
            p[i] -= step[i];
        }
    }
    let g = h.dh_dp(x, &p);
    g.iter().all(|v| v.abs() < 1e-9).then_some(p)
}

/// Rest points of the Hamiltonian flow: critical points of the fiberwise
/// minimum `x -> min_p H(x, p)`, located by a grid scan and Newton refinement.
pub fn detect_equilibria<H: Hamiltonian + ?Sized>(h: &H, grid: usize) -> Vec<(TorusPoint, Vec<f64>)> {
    let n = h.dim();
    let grad = |x: &[f64]| -> Option<Vec<f64>> {
        let p = fiber_minimizer(h, x)?;
        Some(h.dh_dx(x, &p))
    };
    let total = grid.pow(n as u32);
    let mut found: Vec<(TorusPoint, Vec<f64>)> = Vec::new();
    for idx in 0..total {
        let mut x: Vec<f64> = (0..n)
            .map(|d| ((idx / grid.pow(d as u32)) % grid) as f64 / grid as f64)
            .collect();
        let mut ok = false;
        for _ in 0..40 {
            let Some(g) = grad(&x) else { break };
            if g.iter().all(|v| v.abs() < 1e-11) {
                ok = true;
                break;
            }
            let mut jac = nalgebra::DMatrix::zeros(n, n);
            for j in 0..n {
                let mut up = x.clone();
                let mut down = x.clone();
                up[j] += 1e-6;
                down[j] -= 1e-6;
                let (Some(gu), Some(gd)) = (grad(&up), grad(&down)) else {
                    break;
                };
                for i in 0..n {
                    jac[(i, j)] = (gu[i] - gd[i]) / 2e-6;
                }
            }
            let Some(step) = jac.lu().solve(&nalgebra::DVector::from_column_slice(&g)) else {
                break;
            };
            // stay within one grid cell of the seed to keep the scan local
            let len = step.iter().map(|s| s * s).sum::<f64>().sqrt();
            let damp = if len > 1.0 / grid as f64 {
                1.0 / (grid as f64 * len)
            } else {
                1.0
            };
            for i in 0..n {
                x[i] -= damp * step[i];
            }
        }
        if !ok {
            continue;
        }
        let xw = wrap_unchecked(&x);
        if found
            .iter()
            .any(|(y, _)| torus_distance(y.coords(), xw.coords()) < 1e-6)
        {
            continue;
        }
        if let Some(p) = fiber_minimizer(h, xw.coords()) {
            found.push((xw, p));
        }
    }
    found
}

/// Cycles of orbits started on a position x momentum grid, plus zero cycles
/// of the Dirac measures at detected equilibria.
pub fn hamiltonian_ensemble<H: Hamiltonian + ?Sized>(
    h: &H,
    cfg: &EnsembleConfig,
    exec: Execution,
) -> Result<Vec<AsymptoticCycle>> {
    let n = h.dim();
    if cfg.positions == 0 || cfg.momenta == 0 {
        return Err(invalid("ensemble grid must be nonempty"));
    }
    let mut starts = Vec::new();
    let per = cfg.positions.pow(n as u32);
    let mper = cfg.momenta.pow(n as u32);
    let level = |k: usize| {
        if cfg.momenta == 1 {
            0.0
        } else {
            -cfg.p_max + 2.0 * cfg.p_max * k as f64 / (cfg.momenta - 1) as f64
        }
    };
    for i in 0..per {
        let x: Vec<f64> = (0..n)
            .map(|d| ((i / cfg.positions.pow(d as u32)) % cfg.positions) as f64 / cfg.positions as f64)
            .collect();
        for j in 0..mper {
            let p: Vec<f64> = (0..n)
                .map(|d| level((j / cfg.momenta.pow(d as u32)) % cfg.momenta))
                .collect();
            starts.push((wrap_unchecked(&x), p));
        }
    }
    let opts = IntegratorOptions::default();
    let mut cycles: Vec<AsymptoticCycle> = exec
        .map_slice(&starts, |(x, p)| {
            let traj = integrate_with(h, x, p, cfg.window, cfg.dt, &opts)?;
            cycle_from_trajectory(traj.lifted(), cfg.window)
        })
        .into_iter()
        .collect::<Result<_>>()?;
    for (x, p) in detect_equilibria(h, cfg.equilibrium_grid) {
        let v = h.dh_dp(x.coords(), &p);
        let dirac = WeightedMeasure::dirac(x, v, SpaceTag::Tangent)?;
        cycles.push(rotation_vector(&dirac)?);
    }
    Ok(cycles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, occupation_measure};
    use crate::mather::oracle::pendulum_period;
    use crate::tonelli::{MechanicalModel, TrigSeries};

    fn pt(x: &[f64]) -> TorusPoint {
        wrap(x).unwrap()
    }

    #[test]
    fn rotation_vector_examples() {
        let dirac = WeightedMeasure::dirac(pt(&[0.3]), vec![0.0], SpaceTag::Tangent).unwrap();
        assert_eq!(rotation_vector(&dirac).unwrap().value, vec![0.0]);

        let h = [0.3, -1.2];
        let pts = (0..50).map(|k| (pt(&[k as f64 / 50.0, 0.1]), h.to_vec())).collect();
        let mu = WeightedMeasure::uniform(pts, SpaceTag::Tangent).unwrap();
        let rho = rotation_vector(&mu).unwrap().value;
        assert!((rho[0] - 0.3).abs() < 1e-14 && (rho[1] + 1.2).abs() < 1e-14);

        let wrong = WeightedMeasure::dirac(pt(&[0.3]), vec![0.0], SpaceTag::Cotangent).unwrap();
        assert!(rotation_vector(&wrong).is_err());
    }

    #[test]
    fn rotating_pendulum_orbit() {
        let model = MechanicalModel::pendulum(1.0).unwrap();
        let period = pendulum_period(1.5).unwrap();
        let steps = 4000;
        let dt = period / steps as f64;
        let traj = integrate(&model, &pt(&[0.0]), &[1.0], period, dt).unwrap();
        let mu = occupation_measure(&traj, Some(0.0))
            .unwrap()
            .to_tangent(&model)
            .unwrap();
        let rho = rotation_vector(&mu).unwrap().value[0];
        assert!((rho - 1.0 / period).abs() < 1e-5, "{rho} vs {}", 1.0 / period);
        let w = winding_estimate(traj.lifted()).unwrap()[0];
        assert!((w - 1.0 / period).abs() < 1e-5);
    }

    #[test]
    fn flow_measure_formula() {
        let alpha = [1.0, 2f64.sqrt()];
        let field = FlowField::linear(&alpha);
        let pts = (0..100)
            .map(|k| (pt(&[k as f64 * 0.0137, k as f64 * 0.071]), vec![]))
            .collect();
        let mu = WeightedMeasure::uniform(pts, SpaceTag::Base).unwrap();
        let s = cycle_from_flow_measure(&field, &mu).unwrap().value;
        assert!((s[0] - alpha[0]).abs() < 1e-14 && (s[1] - alpha[1]).abs() < 1e-14);

        // zero-mean field against Lebesgue
        let wave = FlowField::new("wave", 1, |x| vec![(2.0 * std::f64::consts::PI * x[0]).sin()]);
        let grid = (0..64).map(|k| (pt(&[k as f64 / 64.0]), vec![])).collect();
        let leb = WeightedMeasure::uniform(grid, SpaceTag::Base).unwrap();
        assert!(cycle_from_flow_measure(&wave, &leb).unwrap().value[0].abs() < 1e-15);

        // a periodic orbit of period t0 winding once around the first circle
        let t0 = 2.5;
        let field = FlowField::linear(&[1.0 / t0, 0.0]);
        let orbit = flow_orbit(&field, &pt(&[0.2, 0.6]), t0, 0.01).unwrap();
        let pts = orbit.points()[..orbit.len() - 1]
            .iter()
            .map(|p| (pt(p), vec![]))
            .collect();
        let mu = WeightedMeasure::uniform(pts, SpaceTag::Base).unwrap();
        let s = cycle_from_flow_measure(&field, &mu).unwrap().value;
        assert!((s[0] - 1.0 / t0).abs() < 1e-14 && s[1] == 0.0);
    }

    #[test]
    fn trajectory_cycles() {
        let alpha = [1.0, 0.4142];
        let orbit = flow_orbit(&FlowField::linear(&alpha), &pt(&[0.3, 0.9]), 1000.0, 0.05).unwrap();
        let c = cycle_from_trajectory(&orbit, 1000.0).unwrap();
        assert!((c.value[0] - 1.0).abs() < 5e-3 && (c.value[1] - 0.4142).abs() < 5e-3);
        assert!(c.error_bar < 1e-9);

        let still = flow_orbit(&FlowField::linear(&[0.0]), &pt(&[0.3]), 10.0, 0.1).unwrap();
        assert_eq!(cycle_from_trajectory(&still, 10.0).unwrap().value, vec![0.0]);

        // librating pendulum: E = 0.5 < 1, closed orbit homologous to zero
        let model = MechanicalModel::pendulum(1.0).unwrap();
        let traj = integrate(&model, &pt(&[0.5]), &[1.0], 200.0, 1e-2).unwrap();
        let c = cycle_from_trajectory(traj.lifted(), 200.0).unwrap();
        assert!(c.value[0].abs() <= 1.0 / 200.0);

        assert!(cycle_from_trajectory(&still, 11.0).is_err());
    }

    #[test]
    fn semiconjugacy_examples() {
        let alpha = vec![1.0, 2f64.sqrt() - 1.0];
        let flow1 = FlowField::linear(&alpha);
        let orbit = flow_orbit(&flow1, &pt(&[0.1, 0.2]), 200.0, 0.05).unwrap();
        let pts = orbit.points().iter().map(|p| (pt(p), vec![])).collect();
        let mu = WeightedMeasure::uniform(pts, SpaceTag::Base).unwrap();
        let check = SemiconjugacyCheck::default();

        let id = TorusMap::identity(2);
        let (l, r) = pushforward_cycle(&id, &mu, &flow1, &flow1, &check).unwrap();
        assert!(l.distance(&r) < 1e-12);

        let m = vec![vec![1, 1], vec![0, 1]];
        let psi = TorusMap::affine(m, vec![0.0, 0.0]);
        let image = psi.act_on_homology(&alpha);
        let flow2 = FlowField::linear(&image);
        let (l, r) = pushforward_cycle(&psi, &mu, &flow1, &flow2, &check).unwrap();
        for i in 0..2 {
            assert!((l.value[i] - image[i]).abs() < 1e-12 && (r.value[i] - image[i]).abs() < 1e-12);
        }
        let (l, r) = pushforward_cycle_along_orbit(&psi, &orbit, 200.0).unwrap();
        assert!(l.distance(&r) < 1e-9);

        // a constant map onto a rest point of phi2
        let sink = FlowField::new("sink", 2, |x| {
            x.iter().map(|v| (2.0 * std::f64::consts::PI * v).sin()).collect()
        });
        let c = TorusMap::constant(2, &pt(&[0.0, 0.0]));
        let (l, r) = pushforward_cycle(&c, &mu, &flow1, &sink, &check).unwrap();
        assert_eq!(l.value, vec![0.0, 0.0]);
        assert_eq!(r.value, vec![0.0, 0.0]);

        // wrong target flow
        let bad = FlowField::linear(&alpha);
        assert!(matches!(
            pushforward_cycle(&psi, &mu, &flow1, &bad, &check),
            Err(Error::SemiconjugacyViolated { .. })
        ));
    }

    #[test]
    fn exact_forms_integrate_to_zero_on_orbits() {
        let alpha = [1.0, 2f64.sqrt() - 1.0];
        let field = FlowField::linear(&alpha);
        let orbit = flow_orbit(&field, &pt(&[0.0, 0.0]), 1000.0, 0.05).unwrap();
        let pts = orbit.points()[..orbit.len() - 1]
            .iter()
            .map(|p| (pt(p), vec![]))
            .collect();
        let mu = WeightedMeasure::uniform(pts, SpaceTag::Base).unwrap();
        let exact = ClosedOneForm::with_exact_part(&[0.0, 0.0], TrigSeries::cosine(0.3, vec![1, 2]));
        assert!(form_integral(&field, &mu, &exact).abs() < 1e-2);
        let class = ClosedOneForm::with_exact_part(&[0.5, -1.0], TrigSeries::cosine(0.3, vec![1, 2]));
        let s = cycle_from_flow_measure(&field, &mu).unwrap().value;
        assert!((form_integral(&field, &mu, &class) - (0.5 * s[0] - s[1])).abs() < 1e-2);
    }

    #[test]
    fn diameters() {
        let single = vec![AsymptoticCycle::exact(vec![0.3])];
        assert_eq!(schwartzman_diameter(&single, 0.0).unwrap().diameter, 0.0);
        assert!(schwartzman_diameter(&[], 0.0).is_err());

        let field = FlowField::linear(&[1.0, 2f64.sqrt() - 1.0]);
        let cycles = flow_ensemble(&field, 20, 1000.0, 0.1, 11, Execution::Parallel).unwrap();
        let rep = schwartzman_diameter(&cycles, 1e-2).unwrap();
        assert!(rep.diameter <= 1e-2 && rep.uniquely_ergodic_sampled);
    }

    #[test]
    fn equilibria_of_pendulum() {
        let model = MechanicalModel::pendulum(1.0).unwrap();
        let mut eq: Vec<f64> = detect_equilibria(&model, 16)
            .iter()
            .map(|(x, _)| x.coords()[0])
            .collect();
        eq.sort_by(f64::total_cmp);
        assert_eq!(eq.len(), 2);
        assert!(eq[0].abs() < 1e-9 && (eq[1] - 0.5).abs() < 1e-9);
        assert_eq!(
            detect_equilibria(&MechanicalModel::two_dof_pendulum(1.0).unwrap(), 8).len(),
            4
        );
    }

    #[test]
    fn cycle_json() {
        let c = AsymptoticCycle {
            value: vec![0.5],
            method: CycleMethod::TrajectoryLimit,
            error_bar: 0.01,
            window: Some(10.0),
        };
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["method"], "trajectory_limit");
        assert_eq!(v["window"], 10.0);
    }
}
