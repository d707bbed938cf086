//! Command implementations behind the `reach` binary.

pub mod format;
mod output;
mod svg;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use reach_core::engine::{run_with_sink, ReachResult, RunError};
use reach_core::model::{validate, ValidationReport};
use reach_core::oracle::{simulate, OracleError, Trace};

pub use format::{load_model, load_problem, LoadedProblem};
pub use output::write_atomic;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Semantic(String),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } => 2,
            _ => 1,
        }
    }
}

pub fn cmd_validate(path: &Path) -> Result<ValidationReport, CliError> {
    let model = load_model(path)?;
    Ok(validate(&model))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub t_f: f64,
    pub jump_count: usize,
    pub final_rho: f64,
    pub final_rho_sci: String,
    pub steps: usize,
    pub attempts: usize,
    pub termination: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub last_failure: Option<String>,
    pub failures_by_kind: BTreeMap<String, usize>,
    pub v_bar: f64,
    pub mu_x: f64,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub summary: Summary,
    pub result: ReachResult,
    pub exit_code: i32,
}

fn summarize(result: &ReachResult, termination: String, last_failure: Option<String>) -> Summary {
    let mut failures_by_kind = BTreeMap::new();
    for f in &result.failures {
        *failures_by_kind.entry(f.kind.to_string()).or_insert(0) += 1;
    }
    Summary {
        t_f: result.t_final(),
        jump_count: result.jump_count(),
        final_rho: result.final_rho(),
        final_rho_sci: format!("{:.4e}", result.final_rho()),
        steps: result.step_count(),
        attempts: result.attempts,
        termination,
        last_failure,
        failures_by_kind,
        v_bar: result.v_bar,
        mu_x: result.mu_x,
    }
}

/// Runs the engine and writes `reached.jsonl`, `reach_polygons.csv`,
/// `summary.json` and `reach.svg` into `out`.
///
/// Exit codes: 0 done, 3 policy exhausted, 4 step cap reached. Partial
/// logs are still written in the last two cases.
pub fn cmd_run(problem_path: &Path, out: &Path, max_steps: Option<usize>) -> Result<RunOutcome, CliError> {
    let loaded = load_problem(problem_path)?;
    let mut config = loaded.file.engine;
    if let Some(m) = max_steps {
        config.max_steps = m;
    }
    let mut policy = loaded.file.policy.build()?;
    let (result, termination, last_failure, exit_code) = match run_with_sink(
        &loaded.model,
        &loaded.init,
        &loaded.problem,
        policy.as_mut(),
        &loaded.file.budget,
        &config,
        &mut (),
    ) {
        Ok(r) => {
            let t = r.termination.expect("complete runs carry a termination").to_string();
            (r, t, None, 0)
        }
        Err(RunError::PolicyExhausted {
            last_failure,
            partial,
        }) => (
            *partial,
            "policy exhausted".to_string(),
            last_failure.map(|e| e.to_string()),
            3,
        ),
        Err(RunError::MaxStepsExceeded { cap, partial }) => (
            *partial,
            "step cap".to_string(),
            Some(format!("exceeded {cap} step attempts")),
            4,
        ),
        Err(e) => return Err(e.into()),
    };

    std::fs::create_dir_all(out).map_err(|e| CliError::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    let summary = summarize(&result, termination, last_failure);
    write_atomic(&out.join("reached.jsonl"), reached_jsonl(&result).as_bytes())?;
    write_atomic(
        &out.join("reach_polygons.csv"),
        polygons_csv(&result, &loaded).as_bytes(),
    )?;
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serialises");
    json.push('\n');
    write_atomic(&out.join("summary.json"), json.as_bytes())?;
    write_atomic(
        &out.join("reach.svg"),
        svg::render(&loaded.model, &result).as_bytes(),
    )?;
    Ok(RunOutcome {
        summary,
        result,
        exit_code,
    })
}

/// One serialised [`ReachStep`](reach_core::ReachStep) per line.
pub fn reached_jsonl(result: &ReachResult) -> String {
    let mut s = String::new();
    for step in &result.steps {
        s.push_str(&serde_json::to_string(step).expect("records serialise"));
        s.push('\n');
    }
    s
}

fn polygons_csv(result: &ReachResult, loaded: &LoadedProblem) -> String {
    let width = result
        .steps
        .iter()
        .map(|s| s.d_hat_gamma.vertices().len())
        .max()
        .unwrap_or(0);
    let mut s = String::from("k,t,location,jump");
    for i in 0..width {
        let _ = write!(s, ",vx{i},vy{i}");
    }
    s.push('\n');
    for step in &result.steps {
        let name = &loaded.model.locations()[step.location.0].name;
        let _ = write!(s, "{},{},{},{}", step.k, step.t, name, step.jump_count);
        let vs = step.d_hat_gamma.vertices();
        for v in vs {
            let _ = write!(s, ",{},{}", v.x, v.y);
        }
        for _ in vs.len()..width {
            s.push_str(",,");
        }
        s.push('\n');
    }
    s
}

/// Simulates the problem's execution and writes `trace.csv` and
/// `events.csv` into `out`.
pub fn cmd_simulate(problem_path: &Path, step: f64, out: &Path) -> Result<Trace, CliError> {
    if !(step.is_finite() && step > 0.0) {
        return Err(CliError::Semantic(format!("--step must be positive, got {step}")));
    }
    let loaded = load_problem(problem_path)?;
    let trace = simulate(
        &loaded.model,
        &loaded.init,
        loaded.problem.horizon,
        loaded.problem.max_jumps,
        step,
    )?;
    let name = |l: reach_core::LocationId| loaded.model.locations()[l.0].name.as_str();
    let mut samples = String::from("t,x1,x2,location\n");
    for p in &trace.samples {
        let _ = writeln!(samples, "{},{},{},{}", p.t, p.x[0], p.x[1], name(p.location));
    }
    let mut events = String::from("t,from,to,x1,x2\n");
    for e in &trace.events {
        let _ = writeln!(
            events,
            "{},{},{},{},{}",
            e.t,
            name(e.from),
            name(e.to),
            e.point[0],
            e.point[1]
        );
    }
    std::fs::create_dir_all(out).map_err(|e| CliError::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    write_atomic(&out.join("trace.csv"), samples.as_bytes())?;
    write_atomic(&out.join("events.csv"), events.as_bytes())?;
    Ok(trace)
}
