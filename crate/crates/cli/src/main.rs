//! `tonelli`: scenario-driven front end of tonelli-core.
//!
//! Exit codes: 0 success, 2 invalid configuration or input, 3 no
//! convergence, 4 theorem-violation verdict or failed acceptance criterion,
//! 1 anything else (I/O, solver backend).

mod run;
mod scenario;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tonelli_core::suite::{run_suite, Level};
use tonelli_core::{Error, Execution};

use run::{csv_with_header, json_with_header, Body};
use scenario::{Scenario, Task};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(Error),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                Error::NoConvergence { .. } => 3,
                Error::ConvexityViolation { .. } | Error::SemiconjugacyViolated { .. } => 4,
                Error::LpError(_) => 1,
                _ => 2,
            },
        }
    }
}

const VIOLATION_EXIT: u8 = 4;

#[derive(Parser)]
#[command(
    name = "tonelli",
    version,
    about = "Numerical laboratory for Tonelli Hamiltonians on tori"
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Tabulate alpha over a class grid (CSV).
    Alpha(ScenarioArgs),
    /// Tabulate beta by conjugating an alpha table (CSV).
    Beta(ScenarioArgs),
    /// Rotation vector of an orbit's occupation measure (JSON).
    Rotvec(ScenarioArgs),
    /// Asymptotic cycle of an orbit (JSON).
    Cycle(ScenarioArgs),
    /// Schwartzman diameter of a phase-space ensemble (JSON).
    Diameter(ScenarioArgs),
    /// Invariance, subcriticality, calibration and comparison of a graph (JSON).
    VerifyGraph(ScenarioArgs),
    /// Minimizing measure of a rotation vector by linear programming (JSON).
    LpMeasure(ScenarioArgs),
    /// Closed-form pendulum oracles.
    Oracle(ScenarioArgs),
    /// Run the acceptance criteria.
    VerifySuite(SuiteArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long)]
    config: PathBuf,
    /// Result file; overrides `out` in the scenario.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed` in the scenario.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long, conflicts_with = "full")]
    quick: bool,
    #[arg(long)]
    full: bool,
    /// JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match configure_threads().and_then(|_| dispatch(cli.verb)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("TONELLI_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("TONELLI_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Io(e.to_string()))
}

fn dispatch(verb: Verb) -> Result<u8, CliError> {
    let (task, args) = match verb {
        Verb::Alpha(a) => (Task::Alpha, a),
        Verb::Beta(a) => (Task::Beta, a),
        Verb::Rotvec(a) => (Task::Rotvec, a),
        Verb::Cycle(a) => (Task::Cycle, a),
        Verb::Diameter(a) => (Task::Diameter, a),
        Verb::VerifyGraph(a) => (Task::VerifyGraph, a),
        Verb::LpMeasure(a) => (Task::LpMeasure, a),
        Verb::Oracle(a) => (Task::Oracle, a),
        Verb::VerifySuite(a) => return verify_suite(a),
    };
    let mut s = Scenario::load(&args.config)?;
    if let Some(seed) = args.seed {
        s.seed = Some(seed);
    }
    if let Some(out) = &args.out {
        s.out = Some(out.display().to_string());
    }
    s.resolve(task)?;
    let outcome = run::run(&s)?;
    let text = match &outcome.body {
        Body::Csv(data) => csv_with_header(&s, data),
        Body::Json(result) => pretty(&json_with_header(&s, result.clone())),
    };
    match &s.out {
        Some(path) => {
            write_atomic(Path::new(path), &text)?;
            if let Some(line) = &outcome.stdout {
                println!("{line}");
            }
        }
        None if task == Task::Oracle => println!("{}", outcome.stdout.as_deref().unwrap_or_default()),
        None => print!("{text}"),
    }
    match outcome.violation {
        Some(v) => {
            eprintln!("violation: {v}");
            Ok(VIOLATION_EXIT)
        }
        None => Ok(0),
    }
}

fn verify_suite(args: SuiteArgs) -> Result<u8, CliError> {
    let level = if args.full { Level::Full } else { Level::Quick };
    let report = run_suite(level, args.seed, Execution::Parallel);
    for c in &report.criteria {
        println!("{}", c.summary_line());
    }
    if let Some(path) = &args.out {
        let json = serde_json::to_value(&report).expect("report serializes");
        write_atomic(path, &pretty(&json))?;
    }
    Ok(if report.passed { 0 } else { VIOLATION_EXIT })
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(text.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
