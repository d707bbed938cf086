//! The reach-set stepping loop.
//!
//! [`run`] drives [`Stepper::post`] with parameters from a [`Policy`]. Each
//! accepted step appends a [`ReachStep`] to the log; the union of the stored
//! `d_hat_gamma` polygons over-approximates every execution from the initial
//! ball up to the final time. Rejected steps are reported back to the policy,
//! which picks new parameters or gives up.

mod post;
mod transition;

pub use post::{detect_transition, Stepper};
pub use transition::{check_deterministic, check_transversal, refine_transition, Refinement, RefineError};

use std::fmt;

use log::{debug, info};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Polytope;
use crate::linalg::{LinalgError, NumericsBudget};
use crate::model::{validate, InitialCondition, LhaModel, LocationId, ModelError, ValidationReport};
use crate::policy::{Policy, PolicyContext, PolicyDecision};

/// Horizon `T`, jump bound `N` and approximation bound `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub horizon: f64,
    pub max_jumps: usize,
    pub epsilon: f64,
}

impl Problem {
    fn check(&self) -> Result<(), RunError> {
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(RunError::InvalidProblem(format!(
                "horizon must be finite and non-negative, got {}",
                self.horizon
            )));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(RunError::InvalidProblem(format!(
                "epsilon must be finite and positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Sub-steps `M` used to localise a jump inside its sampling interval.
    pub substeps: usize,
    /// Minimum normal speed across a facet for a jump to count as
    /// transversal.
    pub eps_trans: f64,
    /// Cap on step attempts, accepted or not.
    pub max_steps: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            substeps: 4096,
            eps_trans: 1e-6,
            max_steps: 1_000_000,
        }
    }
}

/// Parameters of one step attempt.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepParams {
    pub resume_step: usize,
    pub delta: f64,
    pub gamma: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub from: LocationId,
    pub to: LocationId,
    /// Interval certain to contain every crossing from the tracked set.
    pub bracket: (f64, f64),
    /// Sub-interval where the area inside the target invariant overtakes
    /// the area left in the source invariant.
    pub estimate: (f64, f64),
    /// Over-approximate crossing set on the shared facet.
    pub j_hat: Polytope,
    /// Outward normal of the source invariant at the crossing facet.
    pub normal: [f64; 2],
    /// 1-based index of this jump.
    pub jump: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachStep {
    pub k: usize,
    pub t: f64,
    pub location: LocationId,
    pub d_hat: Polytope,
    pub d_hat_gamma: Polytope,
    pub rho: f64,
    pub jump_count: usize,
    pub params: StepParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<TransitionRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorKind {
    StepTooLarge,
    DiameterExceeded,
    InvariantStraddle,
    NondeterministicTransition,
    NontransversalTransition,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ErrorKind::StepTooLarge => "step too large",
            ErrorKind::DiameterExceeded => "diameter exceeded",
            ErrorKind::InvariantStraddle => "invariant straddle",
            ErrorKind::NondeterministicTransition => "nondeterministic transition",
            ErrorKind::NontransversalTransition => "nontransversal transition",
        };
        f.write_str(s)
    }
}

/// A rejected step.
#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[error("step {step}: {kind}: {detail}")]
pub struct EngineError {
    pub kind: ErrorKind,
    pub step: usize,
    pub detail: String,
}

impl EngineError {
    pub fn new(kind: ErrorKind, step: usize, detail: impl Into<String>) -> Self {
        Self {
            kind,
            step,
            detail: detail.into(),
        }
    }
}

/// Why a step attempt produced no record.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error(transparent)]
    Rejected(#[from] EngineError),
    #[error(transparent)]
    Numerics(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    #[serde(rename = "time bound")]
    TimeBound,
    #[serde(rename = "jump bound")]
    JumpBound,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::TimeBound => "time bound",
            Termination::JumpBound => "jump bound",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachResult {
    pub steps: Vec<ReachStep>,
    /// `None` only for partial results attached to a [`RunError`].
    pub termination: Option<Termination>,
    /// Step attempts, accepted or rejected, including replays.
    pub attempts: usize,
    pub failures: Vec<EngineError>,
    pub v_bar: f64,
    pub mu_x: f64,
}

impl ReachResult {
    pub fn last(&self) -> &ReachStep {
        self.steps.last().expect("results always hold the initial record")
    }

    pub fn t_final(&self) -> f64 {
        self.last().t
    }

    pub fn jump_count(&self) -> usize {
        self.last().jump_count
    }

    pub fn final_rho(&self) -> f64 {
        self.last().rho
    }

    /// Accepted steps after the initial record.
    pub fn step_count(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn transitions(&self) -> impl Iterator<Item = &TransitionRecord> {
        self.steps.iter().filter_map(|s| s.transition.as_ref())
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("policy gave up{}", last_failure.as_ref().map(|e| format!(" after {e}")).unwrap_or_default())]
    PolicyExhausted {
        last_failure: Option<EngineError>,
        partial: Box<ReachResult>,
    },
    #[error("exceeded the cap of {cap} step attempts")]
    MaxStepsExceeded { cap: usize, partial: Box<ReachResult> },
    #[error("initial ball of radius {delta} is not inside the interior of the initial invariant")]
    InitialNotInterior { delta: f64 },
    #[error("policy proposed invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("model failed validation with {} violation(s)", .0.violations.len())]
    InvalidModel(ValidationReport),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("numerical failure at step {step}: {source}")]
    Numerics { step: usize, source: LinalgError },
}

/// Receives the log as it grows. Truncation happens when the policy resumes
/// from an earlier step.
pub trait ReachSink {
    fn on_step(&mut self, _step: &ReachStep) {}
    fn on_truncate(&mut self, _len: usize) {}
}

impl ReachSink for () {}

pub fn run(
    model: &LhaModel,
    init: &InitialCondition,
    problem: &Problem,
    policy: &mut dyn Policy,
    budget: &NumericsBudget,
    config: &EngineConfig,
) -> Result<ReachResult, RunError> {
    run_with_sink(model, init, problem, policy, budget, config, &mut ())
}

pub fn run_with_sink(
    model: &LhaModel,
    init: &InitialCondition,
    problem: &Problem,
    policy: &mut dyn Policy,
    budget: &NumericsBudget,
    config: &EngineConfig,
    sink: &mut dyn ReachSink,
) -> Result<ReachResult, RunError> {
    problem.check()?;
    if !budget.is_valid() {
        return Err(RunError::InvalidProblem("error budgets must be finite and non-negative".into()));
    }
    let report = validate(model);
    if !report.is_valid() {
        return Err(RunError::InvalidModel(report));
    }
    model.location(init.location)?;
    let stepper = Stepper::new(model, *problem, *budget, *config);

    let partial = |log: &[ReachStep], attempts, failures: &[EngineError]| ReachResult {
        steps: log.to_vec(),
        termination: None,
        attempts,
        failures: failures.to_vec(),
        v_bar: stepper.v_bar(),
        mu_x: stepper.mu_x(),
    };

    let delta0 = initial_delta(policy, &stepper, init, problem)?;
    let first = stepper.initial(init, delta0)?;
    sink.on_step(&first);
    let mut log: Vec<ReachStep> = vec![first];
    let mut delta = delta0;
    let mut failures: Vec<EngineError> = Vec::new();
    let mut failure: Option<EngineError> = None;
    let mut attempts = 0usize;

    loop {
        let last = log.last().expect("non-empty");
        let termination = if last.t >= problem.horizon {
            Some(Termination::TimeBound)
        } else if last.jump_count >= problem.max_jumps {
            Some(Termination::JumpBound)
        } else {
            None
        };
        if let Some(termination) = termination {
            info!(
                "done by {termination} at t = {} after {} steps, {} jumps",
                last.t,
                log.len() - 1,
                last.jump_count
            );
            return Ok(ReachResult {
                termination: Some(termination),
                ..partial(&log, attempts, &failures)
            });
        }

        let ctx = PolicyContext {
            next_step: log.len(),
            log: &log,
            failure: failure.as_ref(),
            problem,
            v_bar: stepper.v_bar(),
        };
        let p = match policy.propose(&ctx) {
            PolicyDecision::Continue(p) => p,
            PolicyDecision::GiveUp => {
                return Err(RunError::PolicyExhausted {
                    last_failure: failure,
                    partial: Box::new(partial(&log, attempts, &failures)),
                })
            }
        };
        check_params(&p, log.len())?;

        if p.resume_step < log.len() {
            log.truncate(p.resume_step);
            sink.on_truncate(p.resume_step);
        }
        if delta != p.delta {
            debug!("δ changed to {}; replaying {} steps", p.delta, log.len() - 1);
            delta = p.delta;
            match replay(&stepper, init, &log, p.delta, &mut attempts, sink)? {
                Ok(rebuilt) => log = rebuilt,
                Err((rebuilt, e)) => {
                    log = rebuilt;
                    failures.push(e.clone());
                    failure = Some(e);
                    continue;
                }
            }
        }

        attempts += 1;
        if attempts > config.max_steps {
            return Err(RunError::MaxStepsExceeded {
                cap: config.max_steps,
                partial: Box::new(partial(&log, attempts - 1, &failures)),
            });
        }
        let prev = log.last().expect("non-empty");
        match stepper.post(prev, &p) {
            Ok(rec) => {
                if let Some(tr) = &rec.transition {
                    info!(
                        "jump {}: {} -> {} in [{}, {}]",
                        tr.jump,
                        model.locations()[tr.from.0].name,
                        model.locations()[tr.to.0].name,
                        tr.bracket.0,
                        tr.bracket.1
                    );
                }
                sink.on_step(&rec);
                log.push(rec);
                failure = None;
            }
            Err(StepError::Rejected(e)) => {
                debug!("{e}");
                failures.push(e.clone());
                failure = Some(e);
            }
            Err(StepError::Numerics(source)) => {
                return Err(RunError::Numerics {
                    step: log.len(),
                    source,
                })
            }
        }
    }
}

/// Asks the policy for step 1 parameters against a point-sized placeholder
/// record. Only δ is kept; the real proposal for step 1 starts afresh.
fn initial_delta(
    policy: &mut dyn Policy,
    stepper: &Stepper<'_>,
    init: &InitialCondition,
    problem: &Problem,
) -> Result<f64, RunError> {
    let probe = stepper.initial_unchecked(init, 0.0);
    let log = [probe];
    // δ does not depend on the horizon; an unbounded one keeps a zero
    // horizon from clipping the probe's h to nothing.
    let unbounded = Problem {
        horizon: f64::INFINITY,
        ..*problem
    };
    let ctx = PolicyContext {
        next_step: 1,
        log: &log,
        failure: None,
        problem: &unbounded,
        v_bar: stepper.v_bar(),
    };
    match policy.propose(&ctx) {
        PolicyDecision::Continue(p) if p.delta > 0.0 && p.delta.is_finite() => Ok(p.delta),
        PolicyDecision::Continue(p) => Err(RunError::InvalidParams(format!("δ = {}", p.delta))),
        PolicyDecision::GiveUp => Err(RunError::PolicyExhausted {
            last_failure: None,
            partial: Box::new(ReachResult {
                steps: log.to_vec(),
                termination: None,
                attempts: 0,
                failures: Vec::new(),
                v_bar: stepper.v_bar(),
                mu_x: stepper.mu_x(),
            }),
        }),
    }
}

fn check_params(p: &StepParams, len: usize) -> Result<(), RunError> {
    let positive = |v: f64| v.is_finite() && v > 0.0;
    if !(positive(p.delta) && positive(p.gamma) && positive(p.h)) {
        return Err(RunError::InvalidParams(format!(
            "δ = {}, γ = {}, h = {} must all be positive",
            p.delta, p.gamma, p.h
        )));
    }
    if p.resume_step == 0 || p.resume_step > len {
        return Err(RunError::InvalidParams(format!(
            "resume step {} outside 1..={len}",
            p.resume_step
        )));
    }
    Ok(())
}

type Replay = Result<Vec<ReachStep>, (Vec<ReachStep>, EngineError)>;

/// Recomputes the accepted prefix from a new initial ball with the stored
/// `(γ, h)` of each step.
fn replay(
    stepper: &Stepper<'_>,
    init: &InitialCondition,
    log: &[ReachStep],
    delta: f64,
    attempts: &mut usize,
    sink: &mut dyn ReachSink,
) -> Result<Replay, RunError> {
    sink.on_truncate(0);
    let first = stepper.initial(init, delta)?;
    sink.on_step(&first);
    let mut rebuilt = vec![first];
    for old in &log[1..] {
        *attempts += 1;
        let p = StepParams {
            delta,
            ..old.params
        };
        match stepper.post(rebuilt.last().expect("non-empty"), &p) {
            Ok(rec) => {
                sink.on_step(&rec);
                rebuilt.push(rec);
            }
            Err(StepError::Rejected(e)) => return Ok(Err((rebuilt, e))),
            Err(StepError::Numerics(source)) => {
                return Err(RunError::Numerics {
                    step: rebuilt.len(),
                    source,
                })
            }
        }
    }
    Ok(Ok(rebuilt))
}
