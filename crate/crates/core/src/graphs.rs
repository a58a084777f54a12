//! Lagrangian graphs `{(x, c + du(x))}` over T^n and the desk-scale checks
//! behind the uniqueness theorems: invariance, subcriticality, calibration,
//! fiberwise comparison and conjugacy to a rotation.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dynamics::{flow_point, integrate_with, IntegratorOptions};
use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::geometry::wrap_unchecked;
use crate::mather::grid::GridPotential;
use crate::schwartzman::cycle_from_trajectory;
use crate::tonelli::{Hamiltonian, Lagrangian};

/// How the momentum field is derived from the potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Differentiation {
    #[default]
    Centered,
    Spectral,
}

/// The graph of `x -> c + du(x)` on a periodic grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangianGraph {
    cohomology: Vec<f64>,
    potential: GridPotential,
    /// One grid field per momentum component.
    momentum: Vec<GridPotential>,
    lipschitz_estimate: f64,
}

impl LagrangianGraph {
    /// Differentiates `u` on the grid.
    pub fn from_potential(c: &[f64], u: GridPotential, mode: Differentiation) -> Result<Self> {
        if c.len() != u.dim() {
            return Err(invalid("class and potential dimensions differ"));
        }
        let dim = u.dim();
        let n = u.resolution();
        let mut fields = vec![vec![0.0; u.len()]; dim];
        match mode {
            Differentiation::Centered => {
                for i in 0..u.len() {
                    for (a, g) in u.centered_gradient(i).into_iter().enumerate() {
                        fields[a][i] = g;
                    }
                }
            }
            Differentiation::Spectral => {
                for (axis, field) in fields.iter_mut().enumerate() {
                    spectral_derivative(u.values(), dim, n, axis, field);
                }
            }
        }
        let momentum = fields
            .into_iter()
            .zip(c)
            .map(|(f, ci)| GridPotential::new(dim, n, f.into_iter().map(|g| ci + g).collect()))
            .collect::<Result<Vec<_>>>()?;
        let lipschitz_estimate = second_difference_bound(&u);
        Ok(LagrangianGraph {
            cohomology: c.to_vec(),
            potential: u,
            momentum,
            lipschitz_estimate,
        })
    }

    /// A one-dimensional graph from a momentum function `p(x)` with mean `c`;
    /// the potential is recovered by periodic trapezoidal integration of `p - c`.
    pub fn from_momentum_fn(c: f64, n: usize, p: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 4 {
            return Err(invalid("graph resolution must be at least 4"));
        }
        let h = 1.0 / n as f64;
        let ps: Vec<f64> = (0..n).map(|i| p(i as f64 * h)).collect();
        if ps.iter().any(|v| !v.is_finite()) {
            return Err(invalid("momentum function must be finite"));
        }
        let mean = ps.iter().sum::<f64>() / n as f64;
        let mut u = vec![0.0; n];
        for i in 1..n {
            u[i] = u[i - 1] + 0.5 * h * (ps[i - 1] + ps[i] - 2.0 * mean);
        }
        let potential = GridPotential::new(1, n, u)?;
        let lipschitz_estimate = second_difference_bound(&potential);
        Ok(LagrangianGraph {
            cohomology: vec![c],
            momentum: vec![GridPotential::new(1, n, ps)?],
            potential,
            lipschitz_estimate,
        })
    }

    pub fn dim(&self) -> usize {
        self.potential.dim()
    }

    pub fn resolution(&self) -> usize {
        self.potential.resolution()
    }

    pub fn cohomology(&self) -> &[f64] {
        &self.cohomology
    }

    pub fn potential(&self) -> &GridPotential {
        &self.potential
    }

    /// Largest discrete second derivative of `u`, a Lipschitz bound on `du`.
    pub fn lipschitz_estimate(&self) -> f64 {
        self.lipschitz_estimate
    }

    /// Momentum at grid node `i`.
    pub fn momentum_at_node(&self, i: usize) -> Vec<f64> {
        self.momentum.iter().map(|f| f.values()[i]).collect()
    }

    /// Momentum at any point, by periodic linear interpolation.
    pub fn momentum(&self, x: &[f64]) -> Vec<f64> {
        self.momentum.iter().map(|f| f.interpolate(x)).collect()
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.potential.point(i)
    }

    pub fn len(&self) -> usize {
        self.potential.len()
    }

    pub fn is_empty(&self) -> bool {
        self.potential.is_empty()
    }

    /// Graph file `{n, N, c, u}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.dim(),
            "N": self.resolution(),
            "c": self.cohomology,
            "u": self.potential.values(),
        })
    }

    /// Reads a graph file and differentiates its potential.
    pub fn from_json(value: &serde_json::Value, mode: Differentiation) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct GraphFile {
            n: usize,
            #[serde(rename = "N")]
            big_n: usize,
            c: Vec<f64>,
            u: Vec<f64>,
        }
        let f: GraphFile = serde_json::from_value(value.clone()).map_err(|e| invalid(format!("graph file: {e}")))?;
        let u = GridPotential::new(f.n, f.big_n, f.u)?;
        Self::from_potential(&f.c, u, mode)
    }

    /// Momentum components sampled on another grid resolution.
    fn resampled_momentum(&self, n: usize) -> Vec<Vec<f64>> {
        let len = n.pow(self.dim() as u32);
        (0..len)
            .map(|i| self.momentum(&crate::mather::grid::point_of(self.dim(), n, i)))
            .collect()
    }
}

fn second_difference_bound(u: &GridPotential) -> f64 {
    let h = u.spacing();
    let vals = u.values();
    let mut worst: f64 = 0.0;
    for i in 0..u.len() {
        let [i0, i1] = u.cell(i);
        let (i0, i1) = (i0 as i64, i1 as i64);
        let mut axes = vec![(u.index([i0 + 1, i1]), u.index([i0 - 1, i1]))];
        if u.dim() == 2 {
            axes.push((u.index([i0, i1 + 1]), u.index([i0, i1 - 1])));
        }
        for (a, b) in axes {
            worst = worst.max(((vals[a] - 2.0 * vals[i] + vals[b]) / (h * h)).abs());
        }
    }
    worst
}

fn spectral_derivative(vals: &[f64], dim: usize, n: usize, axis: usize, out: &mut [f64]) {
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let lines = if dim == 1 { 1 } else { n };
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for line in 0..lines {
        let idx = |k: usize| {
            if dim == 1 {
                k
            } else if axis == 0 {
                k + n * line
            } else {
                line + n * k
            }
        };
        for (k, b) in buf.iter_mut().enumerate() {
            *b = Complex::new(vals[idx(k)], 0.0);
        }
        fwd.process(&mut buf);
        for (k, b) in buf.iter_mut().enumerate() {
            let freq = if 2 * k < n {
                k as f64
            } else if 2 * k > n {
                k as f64 - n as f64
            } else {
                0.0
            };
            *b *= Complex::new(0.0, TAU * freq);
        }
        inv.process(&mut buf);
        for (k, b) in buf.iter().enumerate() {
            out[idx(k)] = b.re / n as f64;
        }
    }
}

/// Evenly spaced node indices.
fn sample_nodes(len: usize, count: usize) -> Vec<usize> {
    let count = count.clamp(1, len);
    (0..count).map(|k| k * len / count).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Largest vertical distance `|p_graph(x') - p'|` after flowing sampled graph
/// points for time `dt`.
pub fn invariance_defect<H: Hamiltonian + ?Sized>(
    h: &H,
    graph: &LagrangianGraph,
    dt: f64,
    sample_count: usize,
    exec: Execution,
) -> Result<f64> {
    if h.dim() != graph.dim() {
        return Err(invalid("Hamiltonian and graph dimensions differ"));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidStep("dt must be positive".into()));
    }
    let nodes = sample_nodes(graph.len(), sample_count);
    let v_max = nodes
        .iter()
        .map(|&i| {
            h.dh_dp(&graph.point(i), &graph.momentum_at_node(i))
                .iter()
                .fold(0.0f64, |a, v| a.max(v.abs()))
        })
        .fold(0.0, f64::max);
    if v_max * dt >= 0.5 {
        return Err(Error::InvalidStep(format!(
            "dt * v_max = {} reaches half the torus",
            v_max * dt
        )));
    }
    let defects = exec.map_slice(&nodes, |&i| -> Result<f64> {
        let x = graph.point(i);
        let p = graph.momentum_at_node(i);
        let (x1, p1) = flow_point(h, &x, &p, dt, dt.min(1e-3))?;
        let y = wrap_unchecked(&x1);
        Ok(max_abs_diff(&graph.momentum(y.coords()), &p1))
    });
    defects.into_iter().try_fold(0.0f64, |a, d| Ok(a.max(d?)))
}

/// Energy of a graph relative to `alpha(c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubcriticalReport {
    pub subcritical: bool,
    /// Grid nodes where `|H - alpha| <= tol`.
    pub critical_part: Vec<usize>,
    /// `max_x H(x, p(x)) - alpha`.
    pub max_excess: f64,
    /// `min_x H(x, p(x)) - alpha`.
    pub min_excess: f64,
}

pub fn subcritical_report<H: Hamiltonian + ?Sized>(
    h: &H,
    graph: &LagrangianGraph,
    alpha_c: f64,
    tol: f64,
) -> Result<SubcriticalReport> {
    if h.dim() != graph.dim() {
        return Err(invalid("Hamiltonian and graph dimensions differ"));
    }
    let energies: Vec<f64> = (0..graph.len())
        .map(|i| h.hamiltonian(&graph.point(i), &graph.momentum_at_node(i)) - alpha_c)
        .collect();
    let max_excess = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_excess = energies.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SubcriticalReport {
        subcritical: max_excess <= tol,
        critical_part: (0..energies.len()).filter(|&i| energies[i].abs() <= tol).collect(),
        max_excess,
        min_excess,
    })
}

/// Settings of the calibration check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationOptions {
    /// Integration step of graph orbits.
    pub dt: f64,
    /// Length `T` of the orbit segments.
    pub duration: f64,
    /// Number of orbits started on the graph.
    pub samples: usize,
    /// Number of random comparison curves.
    pub curves: usize,
    /// Pieces of each comparison curve.
    pub segments: usize,
    /// Size of the random displacement of interior vertices.
    pub amplitude: f64,
    /// Quadrature points per piece.
    pub quadrature: usize,
    /// Slack allowed in the inequality.
    pub tol: f64,
    pub seed: u64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            dt: 1e-3,
            duration: 5.0,
            samples: 8,
            curves: 100,
            segments: 8,
            amplitude: 0.3,
            quadrature: 200,
            tol: 1e-3,
            seed: 0,
        }
    }
}

/// Outcome of the calibration check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    /// Largest `|int L_eta - (u(end) - u(start) - alpha T)|` over graph orbits.
    pub equality_defect: f64,
    pub inequality_violations: usize,
    pub curves: usize,
    /// Smallest `int L_eta - (u(end) - u(start) - alpha T)` over comparison curves.
    pub min_margin: f64,
}

/// Checks that graph orbits calibrate `u` and that random curves with the
/// same endpoints do not beat them.
pub fn calibration_check<H: Hamiltonian + ?Sized, L: Lagrangian + ?Sized>(
    graph: &LagrangianGraph,
    h: &H,
    l: &L,
    alpha_c: f64,
    opts: &CalibrationOptions,
    exec: Execution,
) -> Result<CalibrationReport> {
    let n = graph.dim();
    if h.dim() != n || l.dim() != n {
        return Err(invalid("model and graph dimensions differ"));
    }
    if opts.samples == 0 || opts.segments == 0 || opts.quadrature == 0 || !(opts.duration > 0.0) {
        return Err(invalid(
            "calibration check needs positive sample, segment and quadrature counts",
        ));
    }
    let c = graph.cohomology().to_vec();
    let integ = IntegratorOptions::default();
    let nodes = sample_nodes(graph.len(), opts.samples);
    let orbits = exec.map_slice(&nodes, |&i| -> Result<(f64, Vec<f64>, Vec<f64>, f64)> {
        let x0 = graph.point(i);
        let p0 = graph.momentum_at_node(i);
        let traj = integrate_with(h, &wrap_unchecked(&x0), &p0, opts.duration, opts.dt, &integ)?;
        // L + H = <p, v> along the orbit, so L_eta = <p - c, v> - H
        let lag: Vec<f64> = traj
            .lifted()
            .points()
            .iter()
            .zip(traj.momenta())
            .map(|(x, p)| {
                let v = h.dh_dp(x, p);
                let pv: f64 = p.iter().zip(&c).zip(&v).map(|((pi, ci), vi)| (pi - ci) * vi).sum();
                pv - h.hamiltonian(x, p)
            })
            .collect();
        let times = traj.times();
        let action: f64 = (1..lag.len())
            .map(|k| 0.5 * (lag[k] + lag[k - 1]) * (times[k] - times[k - 1]))
            .sum();
        let start = traj.lifted().points()[0].clone();
        let end = traj.lifted().points().last().unwrap().clone();
        let t = traj.duration();
        let target = graph.potential().interpolate(wrap_unchecked(&end).coords())
            - graph.potential().interpolate(wrap_unchecked(&start).coords())
            - alpha_c * t;
        Ok(((action - target).abs(), start, end, t))
    });
    let orbits = orbits.into_iter().collect::<Result<Vec<_>>>()?;
    let equality_defect = orbits.iter().map(|o| o.0).fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut curves = Vec::with_capacity(opts.curves);
    for k in 0..opts.curves {
        let (_, start, end, t) = &orbits[k % orbits.len()];
        let mut verts = vec![start.clone()];
        for j in 1..opts.segments {
            let s = j as f64 / opts.segments as f64;
            verts.push(
                start
                    .iter()
                    .zip(end)
                    .map(|(a, b)| a + s * (b - a) + rng.random_range(-opts.amplitude..opts.amplitude))
                    .collect(),
            );
        }
        verts.push(end.clone());
        curves.push((verts, *t));
    }
    let margins = exec.map_slice(&curves, |(verts, t)| {
        let piece = t / opts.segments as f64;
        let mut action = 0.0;
        for w in verts.windows(2) {
            let v: Vec<f64> = w[0].iter().zip(&w[1]).map(|(a, b)| (b - a) / piece).collect();
            let m = opts.quadrature;
            for q in 0..m {
                let s = (q as f64 + 0.5) / m as f64;
                let x: Vec<f64> = w[0].iter().zip(&w[1]).map(|(a, b)| a + s * (b - a)).collect();
                let cv: f64 = c.iter().zip(&v).map(|(ci, vi)| ci * vi).sum();
                action += (l.lagrangian(&x, &v) - cv) * piece / m as f64;
            }
        }
        let start = verts.first().unwrap();
        let end = verts.last().unwrap();
        let target = graph.potential().interpolate(wrap_unchecked(end).coords())
            - graph.potential().interpolate(wrap_unchecked(start).coords())
            - alpha_c * t;
        action - target
    });
    Ok(CalibrationReport {
        equality_defect,
        inequality_violations: margins.iter().filter(|m| **m < -opts.tol).count(),
        curves: margins.len(),
        min_margin: margins.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

/// Outcome of a fiberwise comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Equal,
    Disjoint,
    /// Neither equal nor disjoint; for invariant inputs this contradicts the
    /// uniqueness theorem and is never smoothed away.
    Overlapping,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphComparison {
    pub verdict: Verdict,
    /// `max_x |p1(x) - p2(x)|`.
    pub hausdorff_vertical: f64,
    /// `min_x |p1(x) - p2(x)|`.
    pub min_gap: f64,
    /// Resolution of the common grid.
    pub resolution: usize,
}

/// Compares two graphs fiberwise, resampling onto the finer grid.
pub fn compare_graphs(g1: &LagrangianGraph, g2: &LagrangianGraph, tol: f64) -> Result<GraphComparison> {
    if g1.dim() != g2.dim() {
        return Err(invalid("graphs live over tori of different dimension"));
    }
    let n = g1.resolution().max(g2.resolution());
    let (p1, p2) = (g1.resampled_momentum(n), g2.resampled_momentum(n));
    let gaps: Vec<f64> = p1
        .iter()
        .zip(&p2)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
        .collect();
    let d = gaps.iter().copied().fold(0.0, f64::max);
    let m = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let verdict = if d <= tol {
        Verdict::Equal
    } else if m >= tol {
        Verdict::Disjoint
    } else {
        Verdict::Overlapping
    };
    Ok(GraphComparison {
        verdict,
        hausdorff_vertical: d,
        min_gap: m,
        resolution: n,
    })
}

/// Settings of the conjugacy check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConjugacyOptions {
    pub duration: f64,
    pub dt: f64,
    pub samples: usize,
    /// Boxes per axis of the 2D discrepancy.
    pub boxes: usize,
}

impl Default for ConjugacyOptions {
    fn default() -> Self {
        ConjugacyOptions {
            duration: 1000.0,
            dt: 5e-3,
            samples: 4,
            boxes: 8,
        }
    }
}

/// Mean rotation vector of graph orbits and their distance from equidistribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyReport {
    pub rho: Vec<f64>,
    /// Largest distance of a sample's rotation vector from the mean.
    pub rho_spread: f64,
    /// Kolmogorov–Smirnov distance (n = 1) or anchored box discrepancy
    /// (n = 2) of the orbit positions from the uniform measure; worst sample.
    pub equidistribution_defect: f64,
}

impl ConjugacyReport {
    /// Small defect is consistent with conjugacy to a uniform rotation; it
    /// never certifies it.
    pub fn consistent_with_rotation(&self, tol: f64) -> bool {
        self.equidistribution_defect <= tol
    }
}

pub fn kam_conjugacy_check<H: Hamiltonian + ?Sized>(
    h: &H,
    graph: &LagrangianGraph,
    opts: &ConjugacyOptions,
    exec: Execution,
) -> Result<ConjugacyReport> {
    let n = graph.dim();
    if h.dim() != n {
        return Err(invalid("Hamiltonian and graph dimensions differ"));
    }
    if opts.samples == 0 || opts.boxes == 0 {
        return Err(invalid("conjugacy check needs samples and boxes"));
    }
    let integ = IntegratorOptions::default();
    let nodes = sample_nodes(graph.len(), opts.samples);
    let results = exec.map_slice(&nodes, |&i| -> Result<(Vec<f64>, f64)> {
        let x0 = graph.point(i);
        let p0 = graph.momentum_at_node(i);
        let traj = integrate_with(h, &wrap_unchecked(&x0), &p0, opts.duration, opts.dt, &integ)?;
        let rho = cycle_from_trajectory(traj.lifted(), traj.duration())?.value;
        // drop the closing sample so the positions are a half-open window
        let xs: Vec<&[f64]> = traj.positions()[..traj.len() - 1].iter().map(|p| p.coords()).collect();
        let defect = if n == 1 {
            ks_uniform(xs.iter().map(|x| x[0]).collect())
        } else {
            box_discrepancy(&xs, opts.boxes)
        };
        Ok((rho, defect))
    });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut rho = vec![0.0; n];
    for (r, _) in &results {
        for (a, b) in rho.iter_mut().zip(r) {
            *a += b / results.len() as f64;
        }
    }
    let rho_spread = results.iter().map(|(r, _)| max_abs_diff(r, &rho)).fold(0.0, f64::max);
    let equidistribution_defect = results.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(ConjugacyReport {
        rho,
        rho_spread,
        equidistribution_defect,
    })
}

fn ks_uniform(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(k, &x)| (x - k as f64 / n).abs().max(((k + 1) as f64 / n - x).abs()))
        .fold(0.0, f64::max)
}

fn box_discrepancy(xs: &[&[f64]], boxes: usize) -> f64 {
    let b = boxes;
    let mut counts = vec![0usize; b * b];
    for x in xs {
        let i = ((x[0] * b as f64) as usize).min(b - 1);
        let j = ((x[1] * b as f64) as usize).min(b - 1);
        counts[i + b * j] += 1;
    }
    let total = xs.len() as f64;
    let mut worst: f64 = 0.0;
    // anchored boxes [0, a) x [0, c) with corners on the box grid
    for ai in 1..=b {
        for ci in 1..=b {
            let inside: usize = (0..ci).map(|j| (0..ai).map(|i| counts[i + b * j]).sum::<usize>()).sum();
            let area = (ai * ci) as f64 / (b * b) as f64;
            worst = worst.max((inside as f64 / total - area).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mather::lax_oleinik::{critical_value, ValueIteration};
    use crate::mather::oracle::{pendulum_alpha_oracle, pendulum_momentum, pendulum_rotation};
    use crate::tonelli::MechanicalModel;

    fn flat(c: &[f64], n: usize) -> LagrangianGraph {
        LagrangianGraph::from_potential(c, GridPotential::zeros(c.len(), n).unwrap(), Differentiation::Centered)
            .unwrap()
    }

    fn oracle_graph(n: usize) -> LagrangianGraph {
        let e = pendulum_alpha_oracle(2.0).unwrap();
        LagrangianGraph::from_momentum_fn(2.0, n, |x| pendulum_momentum(e, x)).unwrap()
    }

    fn vi_graph(n: usize) -> (LagrangianGraph, f64, f64) {
        let l = MechanicalModel::pendulum(1.0).unwrap();
        let p = ValueIteration {
            n,
            dt: 0.02,
            v_max: 3.0,
            ..ValueIteration::default()
        };
        let cv = critical_value(&l, &[2.0], &p).unwrap();
        let g = LagrangianGraph::from_potential(&[2.0], cv.potential, Differentiation::Centered).unwrap();
        (g, cv.alpha, cv.residual)
    }

    #[test]
    fn flat_graph_is_invariant_for_free_motion() {
        let h = MechanicalModel::integrable(1).unwrap();
        let d = invariance_defect(&h, &flat(&[0.7], 64), 0.1, 64, Execution::Parallel).unwrap();
        assert!(d <= 1e-10);
        let h2 = MechanicalModel::integrable(2).unwrap();
        let d = invariance_defect(&h2, &flat(&[0.3, -0.2], 16), 0.1, 64, Execution::Parallel).unwrap();
        assert!(d <= 1e-10);
    }

    #[test]
    fn pendulum_invariance() {
        let h = MechanicalModel::pendulum(1.0).unwrap();
        let (g, _, _) = vi_graph(256);
        let d = invariance_defect(&h, &g, 0.1, 64, Execution::Parallel).unwrap();
        assert!(d <= 5.0 / 256.0, "{d}");
        let bad = invariance_defect(&h, &flat(&[0.5], 256), 0.1, 64, Execution::Parallel).unwrap();
        assert!(bad >= 0.1, "{bad}");
        assert!(matches!(
            invariance_defect(&h, &flat(&[0.5], 256), 2.0, 8, Execution::Parallel),
            Err(Error::InvalidStep(_))
        ));
    }

    #[test]
    fn spectral_mode_differentiates_trig_potential() {
        let u = GridPotential::from_fn(1, 64, |x| (TAU * x[0]).sin() / TAU).unwrap();
        let g = LagrangianGraph::from_potential(&[1.0], u.clone(), Differentiation::Spectral).unwrap();
        for i in 0..64 {
            let want = 1.0 + (TAU * g.point(i)[0]).cos();
            assert!((g.momentum_at_node(i)[0] - want).abs() < 1e-12);
        }
        let u2 = GridPotential::from_fn(2, 16, |x| (TAU * x[1]).cos()).unwrap();
        let g2 = LagrangianGraph::from_potential(&[0.0, 0.0], u2, Differentiation::Spectral).unwrap();
        let x = g2.point(37);
        let p = g2.momentum_at_node(37);
        assert!(p[0].abs() < 1e-12 && (p[1] + TAU * (TAU * x[1]).sin()).abs() < 1e-11);
    }

    #[test]
    fn subcriticality_examples() {
        let h = MechanicalModel::integrable(1).unwrap();
        let r = subcritical_report(&h, &flat(&[0.8], 64), 0.32, 1e-9).unwrap();
        assert!(r.subcritical && r.critical_part.len() == 64);

        let pend = MechanicalModel::pendulum(1.0).unwrap();
        let r = subcritical_report(&pend, &flat(&[0.0], 64), 1.0, 1e-9).unwrap();
        assert!(r.subcritical);
        assert_eq!(r.critical_part, vec![0]);

        let oracle = oracle_graph(256);
        let e = pendulum_alpha_oracle(2.0).unwrap();
        let r = subcritical_report(&pend, &oracle, e, 1e-12).unwrap();
        assert!(r.subcritical && r.critical_part.len() == 256);

        let (g, alpha, _) = vi_graph(256);
        let r = subcritical_report(&pend, &g, alpha, 5.0 / 256.0).unwrap();
        assert!(r.subcritical && r.critical_part.len() == 256, "{r:?}");
    }

    #[test]
    fn calibration_integrable() {
        let h = MechanicalModel::integrable(1).unwrap();
        let opts = CalibrationOptions::default();
        let r = calibration_check(&flat(&[0.8], 64), &h, &h, 0.32, &opts, Execution::Parallel).unwrap();
        assert!(r.equality_defect <= 1e-3, "{r:?}");
        assert_eq!(r.inequality_violations, 0);
        assert_eq!(r.curves, 100);
    }

    #[test]
    fn calibration_pendulum_circle() {
        let h = MechanicalModel::pendulum(1.0).unwrap();
        let (g, alpha, _) = vi_graph(256);
        let opts = CalibrationOptions {
            dt: 1e-2,
            ..CalibrationOptions::default()
        };
        let r = calibration_check(&g, &h, &h, alpha, &opts, Execution::Parallel).unwrap();
        assert!(r.equality_defect <= 5e-2, "{r:?}");
        assert_eq!(r.inequality_violations, 0, "{r:?}");
    }

    #[test]
    fn comparison_verdicts() {
        let a = flat(&[0.3], 64);
        let same = compare_graphs(&a, &a, 1e-12).unwrap();
        assert_eq!(same.verdict, Verdict::Equal);
        assert_eq!(same.hausdorff_vertical, 0.0);
        let b = flat(&[0.7], 64);
        let r = compare_graphs(&a, &b, 1e-3).unwrap();
        assert_eq!(r.verdict, Verdict::Disjoint);
        assert!((r.min_gap - 0.4).abs() < 1e-12);

        let u = GridPotential::from_fn(1, 64, |x| 0.1 * (TAU * x[0]).sin()).unwrap();
        let wavy = LagrangianGraph::from_potential(&[0.3], u, Differentiation::Centered).unwrap();
        assert_eq!(compare_graphs(&a, &wavy, 1e-3).unwrap().verdict, Verdict::Overlapping);
    }

    #[test]
    fn pendulum_graphs_agree_across_resolutions() {
        let (g128, _, _) = vi_graph(128);
        let (g256, _, _) = vi_graph(256);
        let r = compare_graphs(&g128, &g256, 5.0 / 128.0).unwrap();
        assert_eq!(r.verdict, Verdict::Equal, "{r:?}");
        let o = compare_graphs(&g256, &oracle_graph(256), 5.0 / 256.0).unwrap();
        assert_eq!(o.verdict, Verdict::Equal, "{o:?}");
    }

    #[test]
    fn conjugacy_examples() {
        let h = MechanicalModel::integrable(1).unwrap();
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let r = kam_conjugacy_check(
            &h,
            &flat(&[golden], 64),
            &ConjugacyOptions::default(),
            Execution::Parallel,
        )
        .unwrap();
        assert!(
            (r.rho[0] - golden).abs() <= 5e-3 && r.equidistribution_defect <= 5e-2,
            "{r:?}"
        );

        let h2 = MechanicalModel::integrable(2).unwrap();
        let opts = ConjugacyOptions {
            duration: 200.0,
            dt: 1e-2,
            ..ConjugacyOptions::default()
        };
        let rational = kam_conjugacy_check(&h2, &flat(&[0.5, 0.25], 16), &opts, Execution::Parallel).unwrap();
        assert!((rational.rho[0] - 0.5).abs() < 1e-9 && (rational.rho[1] - 0.25).abs() < 1e-9);
        let irrational = kam_conjugacy_check(&h2, &flat(&[0.5, 0.5 * golden], 16), &opts, Execution::Parallel).unwrap();
        assert!(
            rational.equidistribution_defect > 0.1 && irrational.equidistribution_defect < 5e-2,
            "{rational:?} {irrational:?}"
        );

        let pend = MechanicalModel::pendulum(1.0).unwrap();
        let r = kam_conjugacy_check(
            &pend,
            &oracle_graph(256),
            &ConjugacyOptions::default(),
            Execution::Parallel,
        )
        .unwrap();
        let want = pendulum_rotation(2.0).unwrap();
        assert!((r.rho[0] - want).abs() <= 5e-3, "{} vs {want}", r.rho[0]);
    }

    #[test]
    fn graph_file_round_trip() {
        let g = oracle_graph(32);
        let back = LagrangianGraph::from_json(&g.to_json(), Differentiation::Centered).unwrap();
        assert_eq!(back.potential(), g.potential());
        assert!(LagrangianGraph::from_json(
            &serde_json::json!({"n": 1, "N": 2, "c": [0.0], "u": [0.0, 0.0], "x": 1}),
            Differentiation::Centered
        )
        .is_err());
    }
}
