//! Calibrated-point estimate of the Aubry set.
//!
//! A one-step transition `x' -> x` is calibrated when
//! `u(x) = u(x') + dt L_eta(mid, (x - x')/dt) + dt alpha` up to `tol_cal dt`.
//! Points lying on a cycle of calibrated transitions carry bi-infinite
//! calibrated discrete orbits; they form the estimate. It is a superset
//! diagnostic of the projected Mather set, not the Aubry set itself.

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::mather::lax_oleinik::{CriticalValue, LaxOleinik, ValueIteration};
use crate::tonelli::{ClosedOneForm, Lagrangian};

/// Floor of the calibration tolerance (per unit time).
pub const MIN_TOL_CAL: f64 = 1e-3;

/// Default calibration tolerance: the floor, or half the squared velocity
/// quantum `1/(N dt)` when that is larger, since grid transitions can miss
/// the true velocity by half a quantum.
pub fn default_tol_cal(params: &ValueIteration) -> f64 {
    let dv = 1.0 / (params.n as f64 * params.dt);
    MIN_TOL_CAL.max(0.5 * dv * dv)
}

/// Grid points found on calibrated cycles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AubryEstimate {
    /// Flat grid indices, increasing.
    pub indices: Vec<usize>,
    pub points: Vec<Vec<f64>>,
    /// Fraction of the grid covered.
    pub coverage: f64,
}

/// Calibrated points of a converged value iteration.
pub fn aubry_estimate<L: Lagrangian + ?Sized>(
    cv: &CriticalValue,
    l: &L,
    eta: &ClosedOneForm,
    params: &ValueIteration,
    tol_cal: f64,
) -> Result<AubryEstimate> {
    if !(tol_cal > 0.0) {
        return Err(invalid("calibration tolerance must be positive"));
    }
    let u = &cv.potential;
    if u.resolution() != params.n {
        return Err(invalid("potential resolution differs from the iteration parameters"));
    }
    let op = LaxOleinik::new(l, eta, params)?;
    let len = u.len();
    let vals = u.values();
    let dt = op.dt();
    let edges: Vec<Vec<usize>> = params.exec.map_range(len, |i| {
        (0..op.offsets().len())
            .filter_map(|k| {
                let p = op.predecessor(i, k);
                let defect = (vals[p] + op.cost(i, k) + dt * cv.alpha - vals[i]) / dt;
                (defect.abs() <= tol_cal).then_some(p)
            })
            .collect()
    });
    let mut graph = DiGraph::<usize, ()>::with_capacity(len, 0);
    let nodes: Vec<_> = (0..len).map(|i| graph.add_node(i)).collect();
    let mut self_loop = vec![false; len];
    for (i, preds) in edges.iter().enumerate() {
        for &p in preds {
            if p == i {
                self_loop[i] = true;
            }
            graph.update_edge(nodes[p], nodes[i], ());
        }
    }
    let mut on_cycle = vec![false; len];
    for comp in tarjan_scc(&graph) {
        if comp.len() > 1 || self_loop[graph[comp[0]]] {
            for n in comp {
                on_cycle[graph[n]] = true;
            }
        }
    }
    let indices: Vec<usize> = (0..len).filter(|&i| on_cycle[i]).collect();
    let points = indices.iter().map(|&i| u.point(i)).collect();
    Ok(AubryEstimate {
        coverage: indices.len() as f64 / len as f64,
        indices,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::torus_distance;
    use crate::mather::lax_oleinik::critical_value;
    use crate::tonelli::MechanicalModel;

    fn run(l: &MechanicalModel, c: f64, p: &ValueIteration, tol: f64) -> AubryEstimate {
        let cv = critical_value(l, &[c], p).unwrap();
        aubry_estimate(&cv, l, &ClosedOneForm::constant(&[c]), p, tol).unwrap()
    }

    #[test]
    fn integrable_calibrates_everything() {
        let l = MechanicalModel::integrable(1).unwrap();
        for c in [0.0, 0.37, -1.2] {
            let p = ValueIteration::default();
            let est = run(&l, c, &p, default_tol_cal(&p));
            assert_eq!(est.coverage, 1.0, "c={c}");
        }
    }

    #[test]
    fn pendulum_rest_class_concentrates_at_zero() {
        let l = MechanicalModel::pendulum(1.0).unwrap();
        for n in [64, 256] {
            let p = ValueIteration {
                n,
                dt: 0.05,
                v_max: 3.0,
                ..ValueIteration::default()
            };
            let est = run(&l, 0.0, &p, MIN_TOL_CAL);
            assert!(!est.indices.is_empty());
            let w = est.points.iter().map(|x| torus_distance(x, &[0.0])).fold(0.0, f64::max);
            assert!(w <= 2.0 / n as f64, "n={n} width={w}");
            if n == 256 {
                let wide = run(&l, 0.0, &p, default_tol_cal(&p));
                assert!(wide.coverage < 0.1, "{}", wide.coverage);
            }
        }
    }

    #[test]
    fn pendulum_rotating_class_covers_circle() {
        let l = MechanicalModel::pendulum(1.0).unwrap();
        let p = ValueIteration {
            n: 128,
            dt: 0.05,
            v_max: 3.0,
            ..ValueIteration::default()
        };
        let est = run(&l, 2.0, &p, default_tol_cal(&p));
        assert_eq!(est.coverage, 1.0);
    }
}
