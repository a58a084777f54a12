//! Hamiltonian flow by the implicit midpoint rule, and occupation measures
//! built from orbit segments.
//!
//! The default scheme composes three midpoint steps (the symmetric triple
//! jump), which keeps the method symplectic and symmetric while raising it
//! to fourth order. Plain midpoint is available as [`Scheme::Midpoint`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::fmt::join17;
use crate::geometry::{torus_distance, wrap_unchecked, LiftedPath, TorusPoint};
use crate::tonelli::{Hamiltonian, Lagrangian};

/// One-step schemes built on the implicit midpoint rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Second order.
    Midpoint,
    /// Fourth-order symmetric composition of three midpoint steps.
    #[default]
    TripleJump,
}

/// Options of the implicit midpoint integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub scheme: Scheme,
    /// Tolerance on the residual of the implicit midpoint equation.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Keep every `stride`-th step in the trajectory.
    pub stride: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            scheme: Scheme::TripleJump,
            newton_tol: 1e-12,
            max_newton: 50,
            stride: 1,
        }
    }
}

fn vector_field<H: Hamiltonian + ?Sized>(h: &H, z: &[f64], n: usize) -> Vec<f64> {
    let (x, p) = z.split_at(n);
    let mut f = h.dh_dp(x, p);
    f.extend(h.dh_dx(x, p).into_iter().map(|d| -d));
    f
}

/// One implicit midpoint step `z1 = z0 + dt F((z0 + z1)/2)` on lifted
/// coordinates `z = (x, p)`. Negative `dt` integrates backwards.
pub fn midpoint_step<H: Hamiltonian + ?Sized>(
    h: &H,
    z0: &[f64],
    dt: f64,
    opts: &IntegratorOptions,
) -> Result<Vec<f64>> {
    let m = z0.len();
    let n = m / 2;
    let f0 = vector_field(h, z0, n);
    let mut z1: Vec<f64> = z0.iter().zip(&f0).map(|(z, f)| z + dt * f).collect();

    // Simplified Newton: Jacobian frozen at the explicit predictor.
    let mid: Vec<f64> = z0.iter().zip(&z1).map(|(a, b)| 0.5 * (a + b)).collect();
    let mut jac = DMatrix::<f64>::identity(m, m);
    let mut buf = mid.clone();
    for j in 0..m {
        let step = 1e-7 * (1.0 + mid[j].abs());
        buf[j] = mid[j] + step;
        let up = vector_field(h, &buf, n);
        buf[j] = mid[j] - step;
        let down = vector_field(h, &buf, n);
        buf[j] = mid[j];
        for i in 0..m {
            jac[(i, j)] -= 0.5 * dt * (up[i] - down[i]) / (2.0 * step);
        }
    }
    let lu = jac.lu();
    let scale = 1.0 + z0.iter().fold(0.0f64, |a, z| a.max(z.abs()));
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_newton {
        let mid: Vec<f64> = z0.iter().zip(&z1).map(|(a, b)| 0.5 * (a + b)).collect();
        let f = vector_field(h, &mid, n);
        let g: Vec<f64> = (0..m).map(|i| z1[i] - z0[i] - dt * f[i]).collect();
        residual = g.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if residual <= opts.newton_tol * scale {
            return Ok(z1);
        }
        if !residual.is_finite() {
            break;
        }
        let delta = lu
            .solve(&DVector::from_column_slice(&g))
            .ok_or_else(|| Error::NoConvergence {
                what: "implicit midpoint (singular Jacobian)".into(),
                iterations: 0,
                residual,
            })?;
        for i in 0..m {
            z1[i] -= delta[i];
        }
    }
    Err(Error::NoConvergence {
        what: "implicit midpoint step".into(),
        iterations: opts.max_newton,
        residual,
    })
}

/// One step of the scheme selected in `opts`.
pub fn step<H: Hamiltonian + ?Sized>(h: &H, z0: &[f64], dt: f64, opts: &IntegratorOptions) -> Result<Vec<f64>> {
    match opts.scheme {
        Scheme::Midpoint => midpoint_step(h, z0, dt, opts),
        Scheme::TripleJump => {
            let cbrt2 = 2f64.cbrt();
            let outer = 1.0 / (2.0 - cbrt2);
            let inner = -cbrt2 / (2.0 - cbrt2);
            let z = midpoint_step(h, z0, outer * dt, opts)?;
            let z = midpoint_step(h, &z, inner * dt, opts)?;
            midpoint_step(h, &z, outer * dt, opts)
        }
    }
}

/// A sampled orbit of the Hamiltonian flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    times: Vec<f64>,
    xs: Vec<TorusPoint>,
    ps: Vec<Vec<f64>>,
    energies: Vec<f64>,
    lifted_x: LiftedPath,
    dt: f64,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn positions(&self) -> &[TorusPoint] {
        &self.xs
    }

    pub fn momenta(&self) -> &[Vec<f64>] {
        &self.ps
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn lifted(&self) -> &LiftedPath {
        &self.lifted_x
    }

    /// Integrator step (not the sampling interval when `stride > 1`).
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.lifted_x.dim()
    }

    pub fn duration(&self) -> f64 {
        self.lifted_x.duration()
    }

    /// `max_k |H(z_k) - H(z_0)|`.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energies[0];
        self.energies.iter().fold(0.0, |a, e| a.max((e - e0).abs()))
    }

    /// CSV with header `t,x1[,x2],p1[,p2],H`; positions are the wrapped representatives.
    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let mut out = String::from("t");
        for i in 1..=n {
            out.push_str(&format!(",x{i}"));
        }
        for i in 1..=n {
            out.push_str(&format!(",p{i}"));
        }
        out.push_str(",H\n");
        for k in 0..self.len() {
            let row = std::iter::once(self.times[k])
                .chain(self.xs[k].coords().iter().copied())
                .chain(self.ps[k].iter().copied())
                .chain(std::iter::once(self.energies[k]));
            out.push_str(&join17(row));
            out.push('\n');
        }
        out
    }
}

/// Integrates the Hamiltonian flow from `(x0, p0)` over `[0, duration]`.
pub fn integrate<H: Hamiltonian + ?Sized>(
    h: &H,
    x0: &TorusPoint,
    p0: &[f64],
    duration: f64,
    dt: f64,
) -> Result<Trajectory> {
    integrate_with(h, x0, p0, duration, dt, &IntegratorOptions::default())
}

pub fn integrate_with<H: Hamiltonian + ?Sized>(
    h: &H,
    x0: &TorusPoint,
    p0: &[f64],
    duration: f64,
    dt: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    let n = h.dim();
    if x0.dim() != n || p0.len() != n {
        return Err(invalid("initial condition has wrong dimension"));
    }
    if !(dt > 0.0) || !(duration >= dt) || !duration.is_finite() {
        return Err(invalid("need dt > 0 and duration >= dt"));
    }
    if opts.stride == 0 {
        return Err(invalid("stride must be positive"));
    }
    let steps = (duration / dt).round() as usize;
    let mut z: Vec<f64> = x0.coords().iter().chain(p0).copied().collect();
    let cap = steps / opts.stride + 2;
    let mut times = Vec::with_capacity(cap);
    let mut lifted = Vec::with_capacity(cap);
    let mut ps = Vec::with_capacity(cap);
    let mut energies = Vec::with_capacity(cap);
    let mut record = |t: f64, z: &[f64]| {
        times.push(t);
        lifted.push(z[..n].to_vec());
        ps.push(z[n..].to_vec());
        energies.push(h.hamiltonian(&z[..n], &z[n..]));
    };
    record(0.0, &z);
    let mut last_recorded = z[..n].to_vec();
    for k in 1..=steps {
        let next = step(h, &z, dt, opts)?;
        let t = k as f64 * dt;
        for i in 0..n {
            let d = (next[i] - z[i]).abs();
            if !(d < 0.5) {
                return Err(Error::LiftViolation {
                    time: t,
                    displacement: d,
                });
            }
        }
        z = next;
        if k % opts.stride == 0 || k == steps {
            for i in 0..n {
                let d = (z[i] - last_recorded[i]).abs();
                if !(d < 0.5) {
                    return Err(Error::LiftViolation {
                        time: t,
                        displacement: d,
                    });
                }
            }
            last_recorded.copy_from_slice(&z[..n]);
            record(t, &z);
        }
    }
    let xs = lifted.iter().map(|p| wrap_unchecked(p)).collect();
    let lifted_x = LiftedPath::from_lifted(times.clone(), lifted)?;
    Ok(Trajectory {
        times,
        xs,
        ps,
        energies,
        lifted_x,
        dt,
    })
}

/// Flows a single phase point for time `t` using steps no longer than `max_step`.
pub fn flow_point<H: Hamiltonian + ?Sized>(
    h: &H,
    x: &[f64],
    p: &[f64],
    t: f64,
    max_step: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = x.len();
    let steps = ((t.abs() / max_step).ceil() as usize).max(1);
    let dt = t / steps as f64;
    let opts = IntegratorOptions::default();
    let mut z: Vec<f64> = x.iter().chain(p).copied().collect();
    for _ in 0..steps {
        z = step(h, &z, dt, &opts)?;
    }
    let p1 = z.split_off(n);
    Ok((z, p1))
}

/// Which bundle the fiber coordinate of a measure lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceTag {
    /// Tangent bundle, fiber coordinate is a velocity.
    #[serde(rename = "TM")]
    Tangent,
    /// Cotangent bundle, fiber coordinate is a momentum.
    #[serde(rename = "T*M")]
    Cotangent,
    /// The torus itself; fiber coordinates are empty.
    #[serde(rename = "M")]
    Base,
}

/// One atom of a discrete measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: TorusPoint,
    #[serde(rename = "v_or_p")]
    pub fiber: Vec<f64>,
    #[serde(rename = "w")]
    pub weight: f64,
}

/// A finitely supported probability measure on TM, T*M or T^n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedMeasure {
    atoms: Vec<Atom>,
    space: SpaceTag,
}

impl WeightedMeasure {
    /// Normalizes nonnegative weights to total mass one.
    pub fn new(points: Vec<(TorusPoint, Vec<f64>)>, weights: Vec<f64>, space: SpaceTag) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(invalid("measure needs one weight per support point"));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(invalid("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(invalid("measure has zero mass"));
        }
        let dim = points[0].0.dim();
        let fiber_dim = if space == SpaceTag::Base { 0 } else { dim };
        if points.iter().any(|(x, f)| x.dim() != dim || f.len() != fiber_dim) {
            return Err(invalid("support points of inconsistent dimension"));
        }
        let atoms = points
            .into_iter()
            .zip(weights)
            .map(|((x, fiber), w)| Atom {
                x,
                fiber,
                weight: w / total,
            })
            .collect();
        Ok(WeightedMeasure { atoms, space })
    }

    pub fn dirac(x: TorusPoint, fiber: Vec<f64>, space: SpaceTag) -> Result<Self> {
        Self::new(vec![(x, fiber)], vec![1.0], space)
    }

    /// Uniform measure on the given points.
    pub fn uniform(points: Vec<(TorusPoint, Vec<f64>)>, space: SpaceTag) -> Result<Self> {
        let w = vec![1.0; points.len()];
        Self::new(points, w, space)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn space(&self) -> SpaceTag {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].x.dim()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// `a mu1 + (1 - a) mu2`.
    pub fn mixture(a: f64, mu1: &WeightedMeasure, mu2: &WeightedMeasure) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) {
            return Err(invalid("mixture weight must lie in [0, 1]"));
        }
        if mu1.space != mu2.space {
            return Err(invalid("cannot mix measures on different spaces"));
        }
        let mut points = Vec::with_capacity(mu1.len() + mu2.len());
        let mut weights = Vec::with_capacity(mu1.len() + mu2.len());
        for (scale, mu) in [(a, mu1), (1.0 - a, mu2)] {
            for atom in &mu.atoms {
                points.push((atom.x.clone(), atom.fiber.clone()));
                weights.push(scale * atom.weight);
            }
        }
        Self::new(points, weights, mu1.space)
    }

    /// Push-forward to TM by `v = dH/dp`.
    pub fn to_tangent<H: Hamiltonian + ?Sized>(&self, h: &H) -> Result<Self> {
        match self.space {
            SpaceTag::Tangent => Ok(self.clone()),
            SpaceTag::Base => Err(invalid("a base measure has no fiber to transform")),
            SpaceTag::Cotangent => Ok(self.map_fiber(SpaceTag::Tangent, |x, p| h.dh_dp(x, p))),
        }
    }

    /// Push-forward to T*M by `p = dL/dv`.
    pub fn to_cotangent<L: Lagrangian + ?Sized>(&self, l: &L) -> Result<Self> {
        match self.space {
            SpaceTag::Cotangent => Ok(self.clone()),
            SpaceTag::Base => Err(invalid("a base measure has no fiber to transform")),
            SpaceTag::Tangent => Ok(self.map_fiber(SpaceTag::Cotangent, |x, v| l.dl_dv(x, v))),
        }
    }

    /// Projection to the torus.
    pub fn base(&self) -> Self {
        self.map_fiber(SpaceTag::Base, |_, _| Vec::new())
    }

    fn map_fiber(&self, space: SpaceTag, f: impl Fn(&[f64], &[f64]) -> Vec<f64>) -> Self {
        WeightedMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    x: a.x.clone(),
                    fiber: f(a.x.coords(), &a.fiber),
                    weight: a.weight,
                })
                .collect(),
            space,
        }
    }

    /// `sum_k w_k g(x_k, fiber_k)`.
    pub fn integrate(&self, g: impl Fn(&[f64], &[f64]) -> f64) -> f64 {
        self.atoms.iter().map(|a| a.weight * g(a.x.coords(), &a.fiber)).sum()
    }

    /// JSON array of `{x, v_or_p, w}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.atoms).expect("atoms serialize")
    }
}

/// Fraction of the duration discarded by default before averaging.
pub const DEFAULT_BURN_IN_FRACTION: f64 = 0.1;

/// Time average along the orbit after `burn_in` (default 10% of the duration).
///
/// Samples in the half-open window `[t0 + burn_in, t_end)` get equal weight,
/// which is the rectangle rule for the time integral and exact for
/// trigonometric observables on orbits closing up at the window end.
pub fn occupation_measure(traj: &Trajectory, burn_in: Option<f64>) -> Result<WeightedMeasure> {
    let t0 = traj.times()[0];
    let duration = traj.duration();
    let burn = burn_in.unwrap_or(DEFAULT_BURN_IN_FRACTION * duration);
    if !(burn >= 0.0) || !(duration - burn > 0.0) {
        return Err(invalid("burn-in must leave a window of positive length"));
    }
    let start = t0 + burn;
    let last = traj.len() - 1;
    let points: Vec<(TorusPoint, Vec<f64>)> = (0..last)
        .filter(|&k| traj.times()[k] >= start - 1e-12 * duration)
        .map(|k| (traj.positions()[k].clone(), traj.momenta()[k].clone()))
        .collect();
    if points.is_empty() {
        return WeightedMeasure::dirac(
            traj.positions()[last].clone(),
            traj.momenta()[last].clone(),
            SpaceTag::Cotangent,
        );
    }
    WeightedMeasure::uniform(points, SpaceTag::Cotangent)
}

/// Product distance on T^n x R^n: flat torus metric times Euclidean fiber metric.
pub fn phase_distance(x1: &[f64], f1: &[f64], x2: &[f64], f2: &[f64]) -> f64 {
    let dx = torus_distance(x1, x2);
    let df: f64 = f1.iter().zip(f2).map(|(a, b)| (a - b).powi(2)).sum();
    (dx * dx + df).sqrt()
}

/// Weighted mean distance from the time-`dt` image of each atom to the
/// nearest atom of the support. Zero for finite unions of orbits sampled at
/// multiples of `dt`.
pub fn invariance_defect_measure<H: Hamiltonian + ?Sized>(
    h: &H,
    mu: &WeightedMeasure,
    dt: f64,
    exec: Execution,
) -> Result<f64> {
    if mu.space() != SpaceTag::Cotangent {
        return Err(invalid("invariance defect needs a measure on T*M"));
    }
    let atoms = mu.atoms();
    let images = exec.map_slice(atoms, |a| flow_point(h, a.x.coords(), &a.fiber, dt, 1e-3));
    let images = images.into_iter().collect::<Result<Vec<_>>>()?;
    let dists = exec.map_slice(&images, |(x, p)| {
        let xw = wrap_unchecked(x);
        atoms
            .iter()
            .map(|b| phase_distance(xw.coords(), p, b.x.coords(), &b.fiber))
            .fold(f64::INFINITY, f64::min)
    });
    Ok(atoms.iter().zip(dists).map(|(a, d)| a.weight * d).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::wrap;
    use crate::tonelli::MechanicalModel;

    fn pt(x: &[f64]) -> TorusPoint {
        wrap(x).unwrap()
    }

    #[test]
    fn free_motion_is_exact() {
        let h = MechanicalModel::integrable(1).unwrap();
        let traj = integrate(&h, &pt(&[0.0]), &[0.3], 10.0, 0.01).unwrap();
        assert!(traj.momenta().iter().all(|p| p[0] == 0.3));
        let end = traj.lifted().points().last().unwrap()[0];
        assert!((end - 3.0).abs() < 1e-12);
        assert!(traj.energy_drift() < 1e-15);
    }

    #[test]
    fn equilibrium_stays_put() {
        let h = MechanicalModel::pendulum(1.0).unwrap();
        let traj = integrate(&h, &pt(&[0.0]), &[0.0], 10.0, 1e-3).unwrap();
        for (x, p) in traj.positions().iter().zip(traj.momenta()) {
            assert!(torus_distance(x.coords(), &[0.0]) < 1e-8 && p[0].abs() < 1e-8);
        }
    }

    #[test]
    fn pendulum_energy_drift() {
        let h = MechanicalModel::pendulum(1.0).unwrap();
        // E = p^2/2 + cos(0) = 1.5
        let opts = IntegratorOptions {
            stride: 100,
            ..Default::default()
        };
        let traj = integrate_with(&h, &pt(&[0.0]), &[1.0], 100.0, 1e-3, &opts).unwrap();
        assert!((traj.energies()[0] - 1.5).abs() < 1e-15);
        assert!(traj.energy_drift() <= 1e-6, "drift {}", traj.energy_drift());

        // plain midpoint oscillates at order dt^2 without secular growth
        let opts = IntegratorOptions {
            scheme: Scheme::Midpoint,
            ..opts
        };
        let traj = integrate_with(&h, &pt(&[0.0]), &[1.0], 100.0, 1e-3, &opts).unwrap();
        assert!(traj.energy_drift() <= 2e-5, "drift {}", traj.energy_drift());
    }

    #[test]
    fn reversibility() {
        let h = MechanicalModel::two_dof_pendulum(1.0).unwrap();
        let opts = IntegratorOptions::default();
        let z0 = vec![0.1, 0.7, 0.9, -1.4];
        let mut z = z0.clone();
        for _ in 0..2000 {
            z = midpoint_step(&h, &z, 1e-3, &opts).unwrap();
        }
        for _ in 0..2000 {
            z = midpoint_step(&h, &z, -1e-3, &opts).unwrap();
        }
        for (a, b) in z.iter().zip(&z0) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn lift_violation_is_reported() {
        let h = MechanicalModel::integrable(1).unwrap();
        let err = integrate(&h, &pt(&[0.0]), &[6.0], 1.0, 0.1).unwrap_err();
        assert!(matches!(err, Error::LiftViolation { .. }));
        let opts = IntegratorOptions {
            stride: 10,
            ..Default::default()
        };
        let err = integrate_with(&h, &pt(&[0.0]), &[0.6], 1.0, 0.1, &opts).unwrap_err();
        assert!(matches!(err, Error::LiftViolation { .. }));
    }

    #[test]
    fn trajectory_csv_header() {
        let h = MechanicalModel::two_dof_pendulum(1.0).unwrap();
        let traj = integrate(&h, &pt(&[0.1, 0.2]), &[0.0, 0.5], 0.02, 0.01).unwrap();
        let csv = traj.to_csv();
        assert_eq!(csv.lines().next(), Some("t,x1,x2,p1,p2,H"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn occupation_measures() {
        let h = MechanicalModel::pendulum(1.0).unwrap();
        let fixed = integrate(&h, &pt(&[0.5]), &[0.0], 1.0, 0.01).unwrap();
        let mu = occupation_measure(&fixed, None).unwrap();
        assert!((mu.total_mass() - 1.0).abs() < 1e-12);
        for a in mu.atoms() {
            assert!(torus_distance(a.x.coords(), &[0.5]) < 1e-12 && a.fiber[0].abs() < 1e-12);
        }

        let free = MechanicalModel::integrable(2).unwrap();
        let traj = integrate(&free, &pt(&[0.0, 0.0]), &[1.0, 0.4142], 50.0, 0.01).unwrap();
        let mu = occupation_measure(&traj, Some(0.0)).unwrap();
        assert!((mu.total_mass() - 1.0).abs() < 1e-12);
        let w0 = mu.atoms()[0].weight;
        assert!(mu.atoms().iter().all(|a| a.weight == w0));
        assert_eq!(mu.len(), traj.len() - 1);
        assert!(occupation_measure(&traj, Some(60.0)).is_err());
    }

    #[test]
    fn measure_json_shape() {
        let mu = WeightedMeasure::dirac(pt(&[0.25]), vec![0.0], SpaceTag::Tangent).unwrap();
        let json = mu.to_json();
        assert_eq!(json[0]["x"][0], 0.25);
        assert_eq!(json[0]["w"], 1.0);
        assert!(json[0]["v_or_p"].is_array());
    }

    #[test]
    fn defect_of_invariant_sets() {
        let h = MechanicalModel::pendulum(1.0).unwrap();
        let eq = WeightedMeasure::dirac(pt(&[0.5]), vec![0.0], SpaceTag::Cotangent).unwrap();
        assert!(invariance_defect_measure(&h, &eq, 0.1, Execution::Parallel).unwrap() < 1e-10);

        let traj = integrate(&h, &pt(&[0.0]), &[1.0], 20.0, 0.01).unwrap();
        let mu = occupation_measure(&traj, Some(0.0)).unwrap();
        let gap = traj
            .positions()
            .windows(2)
            .zip(traj.momenta().windows(2))
            .map(|(x, p)| phase_distance(x[0].coords(), &p[0], x[1].coords(), &p[1]))
            .fold(0.0, f64::max);
        let d = invariance_defect_measure(&h, &mu, 0.01, Execution::Parallel).unwrap();
        assert!(d <= 2.0 * gap, "defect {d} gap {gap}");

        // uniform measure on {p = c} for the free particle
        let free = MechanicalModel::integrable(1).unwrap();
        let n = 64;
        let torus: Vec<(TorusPoint, Vec<f64>)> = (0..n).map(|k| (pt(&[k as f64 / n as f64]), vec![0.37])).collect();
        let mu = WeightedMeasure::uniform(torus, SpaceTag::Cotangent).unwrap();
        let d = invariance_defect_measure(&free, &mu, 0.1, Execution::Sequential).unwrap();
        assert!(d <= 1.0 / n as f64);
    }

    #[test]
    fn tangent_push_forward() {
        let h = MechanicalModel::magnetic(&[0.25]).unwrap();
        let mu = WeightedMeasure::dirac(pt(&[0.1]), vec![1.0], SpaceTag::Cotangent).unwrap();
        let tm = mu.to_tangent(&h).unwrap();
        assert_eq!(tm.atoms()[0].fiber, vec![0.75]);
        let back = tm.to_cotangent(&h).unwrap();
        assert_eq!(back.atoms()[0].fiber, vec![1.0]);
    }
}
