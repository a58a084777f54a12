//! Scenario files: one strict JSON object per run.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tonelli_core::mather::ValueIteration;
use tonelli_core::tonelli::ModelParams;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Alpha,
    Beta,
    Rotvec,
    Cycle,
    Diameter,
    VerifyGraph,
    LpMeasure,
    Oracle,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Alpha => "alpha",
            Task::Beta => "beta",
            Task::Rotvec => "rotvec",
            Task::Cycle => "cycle",
            Task::Diameter => "diameter",
            Task::VerifyGraph => "verify-graph",
            Task::LpMeasure => "lp-measure",
            Task::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[allow(clippy::enum_variant_names)]
pub enum OracleKind {
    PendulumAlpha,
    PendulumEnergy,
    PendulumRotation,
    PendulumClass,
    PendulumPeriod,
}

/// A scenario. `model` is required; everything else depends on the task.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub model: String,
    #[serde(default, skip_serializing_if = "is_default")]
    pub params: ModelParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,

    /// Single cohomology class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_max: Option<f64>,
    /// Class grid points per axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    /// Single rotation vector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_steps: Option<usize>,

    /// Value-iteration resolution.
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_sweeps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,

    /// Orbit duration.
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    /// Integration step of orbits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<f64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub momenta: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_max: Option<f64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_x: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_v: Option<usize>,

    /// Graph file to verify instead of computing one at `c`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<String>,
    /// Second graph file compared against the verified one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare_with: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral: Option<bool>,
    /// Calibration comparison curves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curves: Option<usize>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleKind>,
    /// Energy level for the energy-parametrized oracles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<f64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

fn is_default<T: Default + PartialEq>(x: &T) -> bool {
    *x == T::default()
}

fn missing(task: Task, field: &str) -> CliError {
    CliError::Config(format!("task `{}` requires field `{field}`", task.name()))
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("scenario: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Fixes the task from the command-line verb and checks the fields it needs.
    pub fn resolve(&mut self, verb: Task) -> Result<(), CliError> {
        if let Some(t) = self.task {
            if t != verb {
                return Err(CliError::Config(format!(
                    "scenario task `{}` does not match verb `{}`",
                    t.name(),
                    verb.name()
                )));
            }
        }
        self.task = Some(verb);
        let need = |present: bool, field: &str| if present { Ok(()) } else { Err(missing(verb, field)) };
        match verb {
            Task::Alpha => {
                need(self.c_min.is_some(), "c_min")?;
                need(self.c_max.is_some(), "c_max")?;
                need(self.steps.is_some(), "steps")?;
            }
            Task::Beta => {
                need(self.c_min.is_some(), "c_min")?;
                need(self.c_max.is_some(), "c_max")?;
                need(self.steps.is_some(), "steps")?;
                need(self.h_min.is_some(), "h_min")?;
                need(self.h_max.is_some(), "h_max")?;
                need(self.h_steps.is_some(), "h_steps")?;
            }
            Task::Rotvec | Task::Cycle => {
                need(self.x0.is_some(), "x0")?;
                need(self.p0.is_some(), "p0")?;
                need(self.duration.is_some(), "T")?;
            }
            Task::Diameter => {}
            Task::VerifyGraph => {
                need(self.c.is_some() || self.graph.is_some(), "c")?;
                need(self.seed.is_some(), "seed")?;
            }
            Task::LpMeasure => need(self.h.is_some(), "h")?,
            Task::Oracle => {
                need(self.oracle.is_some(), "oracle")?;
                match self.oracle {
                    Some(OracleKind::PendulumAlpha | OracleKind::PendulumEnergy | OracleKind::PendulumRotation) => {
                        need(self.c.is_some(), "c")?
                    }
                    _ => need(self.e.is_some(), "e")?,
                }
            }
        }
        Ok(())
    }

    pub fn value_iteration(&self) -> ValueIteration {
        let d = ValueIteration::default();
        ValueIteration {
            n: self.n.unwrap_or(d.n),
            dt: self.dt.unwrap_or(d.dt),
            v_max: self.v_max.unwrap_or(d.v_max),
            tol: self.tol.unwrap_or(d.tol),
            max_sweeps: self.max_sweeps.unwrap_or(d.max_sweeps),
            damping: self.damping.unwrap_or(d.damping),
            exec: d.exec,
        }
    }

    /// Canonical JSON echo, parseable by [`Scenario::parse`]. The output
    /// path is left out so that results do not depend on where they land.
    pub fn echo(&self) -> serde_json::Value {
        let s = Scenario {
            out: None,
            ..self.clone()
        };
        serde_json::to_value(s).expect("scenario serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_round_trips() {
        let mut s =
            Scenario::parse(r#"{"model":"integrable","task":"alpha","c_min":-2,"c_max":2,"steps":257,"N":256}"#)
                .unwrap();
        s.resolve(Task::Alpha).unwrap();
        let back = Scenario::parse(&s.echo().to_string()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_unknown_and_missing_fields() {
        let e = Scenario::parse(r#"{"model":"integrable","tolerance":1}"#).unwrap_err();
        assert!(e.to_string().contains("tolerance"));
        let e = Scenario::parse(r#"{"task":"alpha"}"#).unwrap_err();
        assert!(e.to_string().contains("model"));
        let mut s = Scenario::parse(r#"{"model":"pendulum","c":[2.0]}"#).unwrap();
        assert!(s.resolve(Task::VerifyGraph).unwrap_err().to_string().contains("seed"));
    }

    #[test]
    fn verb_must_match_task() {
        let mut s = Scenario::parse(r#"{"model":"integrable","task":"beta"}"#).unwrap();
        assert!(s.resolve(Task::Alpha).is_err());
    }
}
