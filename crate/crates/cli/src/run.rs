//! Task runners. Each returns the result body plus an optional theorem
//! violation, which is reported after the result file is written.

use serde_json::{json, Value};
use tonelli_core::dynamics::{integrate_with, occupation_measure, IntegratorOptions};
use tonelli_core::fmt::f17;
use tonelli_core::geometry::wrap;
use tonelli_core::graphs::{
    calibration_check, compare_graphs, invariance_defect, kam_conjugacy_check, subcritical_report, CalibrationOptions,
    ConjugacyOptions, Differentiation, LagrangianGraph, Verdict,
};
use tonelli_core::mather::oracle::{
    pendulum_alpha_oracle, pendulum_class, pendulum_energy, pendulum_period, pendulum_rotation,
};
use tonelli_core::mather::tables::CONVEXITY_LIMIT;
use tonelli_core::mather::{
    alpha_table, beta_from_alpha, conjugate_back, critical_value, grid_modulus, mather_measure_lp, AlphaTable, LpGrid,
    TensorGrid,
};
use tonelli_core::schwartzman::{
    cycle_from_trajectory, hamiltonian_ensemble, rotation_vector, schwartzman_diameter, AsymptoticCycle, EnsembleConfig,
};
use tonelli_core::tonelli::{build_model, Lagrangian, MechanicalModel};
use tonelli_core::{Execution, VERSION};

use crate::scenario::{OracleKind, Scenario, Task};
use crate::CliError;

pub enum Body {
    Csv(String),
    Json(Value),
}

pub struct Outcome {
    pub body: Body,
    /// Short text printed on standard output.
    pub stdout: Option<String>,
    pub violation: Option<String>,
}

impl Outcome {
    fn json(result: Value) -> Self {
        Outcome {
            body: Body::Json(result),
            stdout: None,
            violation: None,
        }
    }
}

/// Default orbit step.
const FLOW_DT: f64 = 1e-3;
/// Step of the invariance probe on graphs.
const INVARIANCE_DT: f64 = 0.1;
const INVARIANCE_SAMPLES: usize = 64;
/// Fiberwise comparison tolerance in units of the grid spacing.
const GRAPH_TOL_CELLS: f64 = 5.0;

fn num(x: f64) -> Value {
    Value::String(f17(x))
}

fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|x| num(*x)).collect())
}

fn cycle_json(c: &AsymptoticCycle) -> Value {
    json!({
        "value": nums(&c.value),
        "method": c.method,
        "error_bar": num(c.error_bar),
        "window": c.window.map(num),
    })
}

/// Prefixes CSV data with the version and the config echo as comment lines.
pub fn csv_with_header(s: &Scenario, data: &str) -> String {
    format!("# tonelli {VERSION}\n# config {}\n{data}", s.echo())
}

/// Wraps a JSON result with the version and the config echo.
pub fn json_with_header(s: &Scenario, result: Value) -> Value {
    json!({ "version": VERSION, "config": s.echo(), "result": result })
}

pub fn run(s: &Scenario) -> Result<Outcome, CliError> {
    let model = build_model(&s.model, &s.params)?;
    match s.task.expect("task resolved") {
        Task::Alpha => alpha(s, &model),
        Task::Beta => beta(s, &model),
        Task::Rotvec => orbit(s, &model, true),
        Task::Cycle => orbit(s, &model, false),
        Task::Diameter => diameter(s, &model),
        Task::VerifyGraph => verify_graph(s, &model),
        Task::LpMeasure => lp(s, &model),
        Task::Oracle => oracle(s),
    }
}

fn table(s: &Scenario, model: &MechanicalModel) -> Result<AlphaTable, CliError> {
    let dim = Lagrangian::dim(model);
    let grid = TensorGrid::uniform(dim, s.c_min.unwrap(), s.c_max.unwrap(), s.steps.unwrap())?;
    let t = alpha_table(model, &s.model, &grid, &s.value_iteration())?;
    if t.valid_count() < t.grid.len() {
        let bad = t.grid.len() - t.valid_count();
        eprintln!("warning: {bad} alpha entries did not converge and are excluded");
    }
    Ok(t)
}

fn alpha(s: &Scenario, model: &MechanicalModel) -> Result<Outcome, CliError> {
    let mut t = table(s, model)?;
    if t.valid_count() == 0 {
        return Err(CliError::Core(tonelli_core::Error::NoConvergence {
            what: "value iteration".into(),
            iterations: s.value_iteration().max_sweeps,
            residual: t.residual.iter().copied().fold(f64::INFINITY, f64::min),
        }));
    }
    let violation = t.convexify(CONVEXITY_LIMIT).err().map(|e| e.to_string());
    Ok(Outcome {
        body: Body::Csv(t.to_csv()),
        stdout: None,
        violation,
    })
}

fn beta(s: &Scenario, model: &MechanicalModel) -> Result<Outcome, CliError> {
    let mut t = table(s, model)?;
    t.convexify(CONVEXITY_LIMIT)?;
    let h_grid = TensorGrid::uniform(t.grid.dim(), s.h_min.unwrap(), s.h_max.unwrap(), s.h_steps.unwrap())?;
    let b = beta_from_alpha(&t, &h_grid)?;
    let back = conjugate_back(&b, &t.grid);
    let err = t
        .alpha
        .iter()
        .zip(&back)
        .map(|(a, aa)| (a - aa).abs())
        .fold(0.0, f64::max);
    let bound = 2.0 * grid_modulus(&t.grid, &h_grid);
    let violation = (err > bound).then(|| {
        format!(
            "double conjugation error {} exceeds twice the grid modulus {}",
            f17(err),
            f17(bound)
        )
    });
    Ok(Outcome {
        body: Body::Csv(b.to_csv()),
        stdout: Some(format!("duality_error {} bound {}", f17(err), f17(bound))),
        violation,
    })
}

fn orbit(s: &Scenario, model: &MechanicalModel, rotvec: bool) -> Result<Outcome, CliError> {
    let x0 = wrap(s.x0.as_ref().unwrap())?;
    let p0 = s.p0.as_ref().unwrap();
    let duration = s.duration.unwrap();
    let traj = integrate_with(
        model,
        &x0,
        p0,
        duration,
        s.flow_dt.unwrap_or(FLOW_DT),
        &IntegratorOptions::default(),
    )?;
    let result = if rotvec {
        let mu = occupation_measure(&traj, s.burn_in)?.to_tangent(model)?;
        let rho = rotation_vector(&mu)?;
        json!({ "rho": nums(&rho.value), "atoms": mu.len(), "energy_drift": num(traj.energy_drift()) })
    } else {
        let c = cycle_from_trajectory(traj.lifted(), duration)?;
        json!({ "cycle": cycle_json(&c), "energy_drift": num(traj.energy_drift()) })
    };
    Ok(Outcome::json(result))
}

fn diameter(s: &Scenario, model: &MechanicalModel) -> Result<Outcome, CliError> {
    let d = EnsembleConfig::default();
    let cfg = EnsembleConfig {
        positions: s.positions.unwrap_or(d.positions),
        momenta: s.momenta.unwrap_or(d.momenta),
        p_max: s.p_max.unwrap_or(d.p_max),
        window: s.duration.unwrap_or(d.window),
        dt: s.flow_dt.unwrap_or(d.dt),
        equilibrium_grid: d.equilibrium_grid,
    };
    let cycles = hamiltonian_ensemble(model, &cfg, Execution::Parallel)?;
    let r = schwartzman_diameter(&cycles, s.tol.unwrap_or(0.0))?;
    Ok(Outcome::json(json!({
        "diameter": num(r.diameter),
        "members": r.members,
        "max_error_bar": num(r.max_error_bar),
        "uniquely_ergodic_sampled": r.uniquely_ergodic_sampled,
        "cycles": cycles.iter().map(cycle_json).collect::<Vec<_>>(),
    })))
}

fn read_graph(path: &str, mode: Differentiation) -> Result<LagrangianGraph, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {path}: {e}")))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("graph file {path}: {e}")))?;
    Ok(LagrangianGraph::from_json(&value, mode)?)
}

fn verify_graph(s: &Scenario, model: &MechanicalModel) -> Result<Outcome, CliError> {
    let mode = if s.spectral.unwrap_or(false) {
        Differentiation::Spectral
    } else {
        Differentiation::Centered
    };
    let mut params = s.value_iteration();
    let graph = match &s.graph {
        Some(path) => read_graph(path, mode)?,
        None => {
            let cv = critical_value(model, s.c.as_ref().unwrap(), &params)?;
            LagrangianGraph::from_potential(s.c.as_ref().unwrap(), cv.potential, mode)?
        }
    };
    params.n = graph.resolution();
    let cv = critical_value(model, graph.cohomology(), &params)?;
    let tol = GRAPH_TOL_CELLS / graph.resolution() as f64;
    let exec = Execution::Parallel;
    let invariance = invariance_defect(model, &graph, INVARIANCE_DT, INVARIANCE_SAMPLES, exec)?;
    let sub = subcritical_report(model, &graph, cv.alpha, tol)?;
    let d = CalibrationOptions::default();
    let cal_opts = CalibrationOptions {
        dt: s.flow_dt.unwrap_or(1e-2),
        duration: s.duration.unwrap_or(d.duration),
        curves: s.curves.unwrap_or(d.curves),
        seed: s.seed.unwrap(),
        ..d
    };
    let cal = calibration_check(&graph, model, model, cv.alpha, &cal_opts, exec)?;
    let conj = kam_conjugacy_check(model, &graph, &ConjugacyOptions::default(), exec)?;
    let mut violations = Vec::new();
    if !sub.subcritical {
        violations.push(format!("graph is not subcritical: max excess {}", f17(sub.max_excess)));
    }
    let comparison = match &s.compare_with {
        Some(path) => {
            let other = read_graph(path, mode)?;
            let r = compare_graphs(&graph, &other, tol)?;
            if r.verdict == Verdict::Overlapping {
                violations.push(format!(
                    "graphs overlap: vertical distance {} and minimal gap {} at tolerance {}",
                    f17(r.hausdorff_vertical),
                    f17(r.min_gap),
                    f17(tol)
                ));
            }
            json!({
                "verdict": r.verdict,
                "hausdorff_vertical": num(r.hausdorff_vertical),
                "min_gap": num(r.min_gap),
                "resolution": r.resolution,
                "tolerance": num(tol),
            })
        }
        None => Value::Null,
    };
    let result = json!({
        "c": nums(graph.cohomology()),
        "N": graph.resolution(),
        "alpha": num(cv.alpha),
        "lipschitz_estimate": num(graph.lipschitz_estimate()),
        "invariance_defect": num(invariance),
        "subcritical": {
            "subcritical": sub.subcritical,
            "critical_part_size": sub.critical_part.len(),
            "max_excess": num(sub.max_excess),
            "min_excess": num(sub.min_excess),
            "tolerance": num(tol),
        },
        "calibration": {
            "equality_defect": num(cal.equality_defect),
            "inequality_violations": cal.inequality_violations,
            "curves": cal.curves,
            "min_margin": num(cal.min_margin),
        },
        "conjugacy": {
            "rho": nums(&conj.rho),
            "rho_spread": num(conj.rho_spread),
            "equidistribution_defect": num(conj.equidistribution_defect),
        },
        "comparison": comparison,
    });
    Ok(Outcome {
        body: Body::Json(result),
        stdout: None,
        violation: (!violations.is_empty()).then(|| violations.join("; ")),
    })
}

fn lp(s: &Scenario, model: &MechanicalModel) -> Result<Outcome, CliError> {
    let d = LpGrid::default();
    let grid = LpGrid {
        n_x: s.n_x.unwrap_or(d.n_x),
        n_v: s.n_v.unwrap_or(d.n_v),
        v_max: s.v_max.unwrap_or(d.v_max),
    };
    let out = mather_measure_lp(model, s.h.as_ref().unwrap(), &grid, s.dt.unwrap_or(0.05))?;
    Ok(Outcome {
        stdout: Some(f17(out.beta)),
        ..Outcome::json(json!({
            "h": nums(s.h.as_ref().unwrap()),
            "beta": num(out.beta),
            "pivots": out.pivots,
            "measure": out.measure.to_json(),
        }))
    })
}

fn oracle(s: &Scenario) -> Result<Outcome, CliError> {
    if s.model != "pendulum" || s.params.amplitude.is_some_and(|a| a != 1.0) {
        return Err(CliError::Config(
            "oracles are available for the unit-amplitude pendulum only".into(),
        ));
    }
    let kind = s.oracle.unwrap();
    let scalar = |v: &Option<Vec<f64>>, name: &str| -> Result<f64, CliError> {
        match v.as_deref() {
            Some([x]) => Ok(*x),
            _ => Err(CliError::Config(format!("oracle needs a one-dimensional `{name}`"))),
        }
    };
    let value = match kind {
        OracleKind::PendulumAlpha => pendulum_alpha_oracle(scalar(&s.c, "c")?)?,
        OracleKind::PendulumEnergy => pendulum_energy(scalar(&s.c, "c")?)?,
        OracleKind::PendulumRotation => pendulum_rotation(scalar(&s.c, "c")?)?,
        OracleKind::PendulumClass => pendulum_class(s.e.unwrap())?,
        OracleKind::PendulumPeriod => pendulum_period(s.e.unwrap())?,
    };
    Ok(Outcome {
        stdout: Some(f17(value)),
        ..Outcome::json(json!({ "oracle": kind, "value": num(value) }))
    })
}
