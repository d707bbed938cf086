//! Parameter selection for the engine.
//!
//! Before each step the engine asks a [`Policy`] for `(k, δ_k, γ_k, h_k)`.
//! After a rejected step it asks again, passing the failure, and the policy
//! either proposes smaller parameters or gives up.

use serde::{Deserialize, Serialize};

use crate::engine::{EngineError, ErrorKind, Problem, ReachStep, StepParams};

pub struct PolicyContext<'a> {
    /// Index of the step about to be computed (the log length).
    pub next_step: usize,
    /// Accepted records so far; never empty.
    pub log: &'a [ReachStep],
    /// Why the previous attempt at `next_step` was rejected, if it was.
    pub failure: Option<&'a EngineError>,
    pub problem: &'a Problem,
    pub v_bar: f64,
}

impl PolicyContext<'_> {
    pub fn last(&self) -> &ReachStep {
        self.log.last().expect("the log always holds the initial record")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyDecision {
    Continue(StepParams),
    GiveUp,
}

pub trait Policy {
    fn propose(&mut self, ctx: &PolicyContext<'_>) -> PolicyDecision;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub delta: f64,
    pub max_retries: usize,
    pub shrink: f64,
    /// Multiplier on the nominal step `(γ/2)/v̄`. Values above 2 make the
    /// first attempt at every step too large.
    pub h_scale: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            delta: 1e-5,
            max_retries: 20,
            shrink: 0.5,
            h_scale: 1.0,
        }
    }
}

/// Retry bookkeeping for the step currently being attempted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolicyState {
    pub step: usize,
    pub retries: usize,
    pub gamma: f64,
    pub h: f64,
    pub last_failures: Vec<ErrorKind>,
}

/// Fixed δ; `γ_k = (ε − dia(D̂ρ_{k−1}))/2` and `h_k = (γ_k/2)/v̄`, shrunk
/// geometrically on failure.
///
/// A rejected step shrinks `h` only when the step was too large, and both
/// `γ` and `h` otherwise.
#[derive(Debug, Clone, Default)]
pub struct DefaultPolicy {
    config: PolicyConfig,
    state: PolicyState,
}

impl DefaultPolicy {
    pub fn new(config: PolicyConfig) -> Self {
        Self {
            config,
            state: PolicyState::default(),
        }
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    pub fn state(&self) -> &PolicyState {
        &self.state
    }

    /// `(γ, h)` for `ctx.next_step`, or `None` to give up.
    fn next_gamma_h(&mut self, ctx: &PolicyContext<'_>) -> Option<(f64, f64)> {
        let k = ctx.next_step;
        let retrying = matches!(ctx.failure, Some(e) if e.step == k) && self.state.step == k;
        if retrying {
            let failure = ctx.failure.expect("checked above");
            self.state.retries += 1;
            self.state.last_failures.push(failure.kind);
            if self.state.retries > self.config.max_retries {
                return None;
            }
            if failure.kind != ErrorKind::StepTooLarge {
                self.state.gamma *= self.config.shrink;
            }
            self.state.h *= self.config.shrink;
        } else {
            let last = ctx.last();
            let dia_rho = last.d_hat.diameter() + 2.0 * last.rho;
            let gamma = (ctx.problem.epsilon - dia_rho) / 2.0;
            if gamma.is_nan() || gamma <= 0.0 {
                return None;
            }
            self.state = PolicyState {
                step: k,
                retries: 0,
                gamma,
                h: self.config.h_scale * (gamma / 2.0) / ctx.v_bar,
                last_failures: Vec::new(),
            };
        }
        let remaining = ctx.problem.horizon - ctx.last().t;
        let h = self.state.h.min(remaining);
        (self.state.gamma > 0.0 && h > 0.0).then_some((self.state.gamma, h))
    }
}

impl Policy for DefaultPolicy {
    fn propose(&mut self, ctx: &PolicyContext<'_>) -> PolicyDecision {
        match self.next_gamma_h(ctx) {
            Some((gamma, h)) => PolicyDecision::Continue(StepParams {
                resume_step: ctx.next_step,
                delta: self.config.delta,
                gamma,
                h,
            }),
            None => PolicyDecision::GiveUp,
        }
    }
}

/// Like [`DefaultPolicy`], but every rejection also shrinks δ, which makes
/// the engine recompute the accepted prefix from the smaller initial ball.
#[derive(Debug, Clone, Default)]
pub struct DeltaShrinkingPolicy {
    inner: DefaultPolicy,
    delta: f64,
}

impl DeltaShrinkingPolicy {
    pub fn new(config: PolicyConfig) -> Self {
        Self {
            inner: DefaultPolicy::new(config),
            delta: config.delta,
        }
    }
}

impl Policy for DeltaShrinkingPolicy {
    fn propose(&mut self, ctx: &PolicyContext<'_>) -> PolicyDecision {
        let failed_here = matches!(ctx.failure, Some(e) if e.step == ctx.next_step);
        match self.inner.next_gamma_h(ctx) {
            Some((gamma, h)) => {
                if failed_here {
                    self.delta *= self.inner.config.shrink;
                }
                PolicyDecision::Continue(StepParams {
                    resume_step: ctx.next_step,
                    delta: self.delta,
                    gamma,
                    h,
                })
            }
            None => PolicyDecision::GiveUp,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{linf_ball, Point};
    use crate::model::LocationId;

    fn record(dia: f64) -> ReachStep {
        let d = linf_ball(&Point::new(0.0, 0.0), dia / 2.0).unwrap();
        ReachStep {
            k: 0,
            t: 0.0,
            location: LocationId(0),
            d_hat_gamma: d.clone(),
            d_hat: d,
            rho: 0.0,
            jump_count: 0,
            params: StepParams::default(),
            transition: None,
        }
    }

    fn problem() -> Problem {
        Problem {
            horizon: 20.0,
            max_jumps: 10,
            epsilon: 0.5,
        }
    }

    fn ctx<'a>(log: &'a [ReachStep], p: &'a Problem, failure: Option<&'a EngineError>) -> PolicyContext<'a> {
        PolicyContext {
            next_step: log.len(),
            log,
            failure,
            problem: p,
            v_bar: 25.9,
        }
    }

    fn params(d: PolicyDecision) -> StepParams {
        match d {
            PolicyDecision::Continue(p) => p,
            PolicyDecision::GiveUp => panic!("unexpected give-up"),
        }
    }

    #[test]
    fn nominal_formulas() {
        let log = [record(0.1)];
        let p = problem();
        let s = params(DefaultPolicy::default().propose(&ctx(&log, &p, None)));
        assert!((s.gamma - 0.2).abs() < 1e-15);
        assert!((s.h - 0.1 / 25.9).abs() < 1e-15);
        assert_eq!(s.delta, 1e-5);
        assert_eq!(s.resume_step, 1);
        assert!(s.h < s.gamma / 25.9);
    }

    #[test]
    fn no_admissible_gamma() {
        let log = [record(0.5)];
        let p = problem();
        assert_eq!(
            DefaultPolicy::default().propose(&ctx(&log, &p, None)),
            PolicyDecision::GiveUp
        );
    }

    #[test]
    fn shrink_schedule() {
        let log = [record(0.1)];
        let p = problem();
        let mut pol = DefaultPolicy::default();
        let first = params(pol.propose(&ctx(&log, &p, None)));
        let too_large = EngineError::new(ErrorKind::StepTooLarge, 1, "");
        let second = params(pol.propose(&ctx(&log, &p, Some(&too_large))));
        assert_eq!(second.gamma, first.gamma);
        assert_eq!(second.h, first.h / 2.0);
        let straddle = EngineError::new(ErrorKind::InvariantStraddle, 1, "");
        let third = params(pol.propose(&ctx(&log, &p, Some(&straddle))));
        assert_eq!(third.gamma, first.gamma / 2.0);
        assert_eq!(third.h, first.h / 4.0);
    }

    #[test]
    fn gives_up_after_max_retries() {
        let log = [record(0.1)];
        let p = problem();
        let mut pol = DefaultPolicy::new(PolicyConfig {
            max_retries: 3,
            ..PolicyConfig::default()
        });
        let e = EngineError::new(ErrorKind::DiameterExceeded, 1, "");
        assert!(matches!(pol.propose(&ctx(&log, &p, None)), PolicyDecision::Continue(_)));
        for _ in 0..3 {
            assert!(matches!(pol.propose(&ctx(&log, &p, Some(&e))), PolicyDecision::Continue(_)));
        }
        assert_eq!(pol.propose(&ctx(&log, &p, Some(&e))), PolicyDecision::GiveUp);
    }

    #[test]
    fn step_clipped_to_horizon() {
        let mut last = record(0.1);
        last.t = 19.999;
        let log = [last];
        let p = problem();
        let s = params(DefaultPolicy::default().propose(&ctx(&log, &p, None)));
        assert!((s.h - 0.001).abs() < 1e-12);
    }

    #[test]
    fn delta_shrinks_on_failure() {
        let log = [record(0.1)];
        let p = problem();
        let mut pol = DeltaShrinkingPolicy::new(PolicyConfig::default());
        let a = params(pol.propose(&ctx(&log, &p, None)));
        let e = EngineError::new(ErrorKind::InvariantStraddle, 1, "");
        let b = params(pol.propose(&ctx(&log, &p, Some(&e))));
        assert_eq!(b.delta, a.delta / 2.0);
    }
}
