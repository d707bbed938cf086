use log::trace;

use super::transition::{check_deterministic, check_transversal, refine_transition, RefineError};
use super::{EngineConfig, EngineError, ErrorKind, Problem, ReachStep, RunError, StepError, StepParams, TransitionRecord};
use crate::geometry::{linf_ball, Point, Polytope};
use crate::linalg::{compute_mu_x, v_bar, FlowMap, LinalgError, NumericsBudget, Vector};
use crate::model::{InitialCondition, LhaModel, LocationId};

/// Relative slack on the transversality widening, so that condition (i)
/// holds strictly after rounding.
const WIDEN_SLACK: f64 = 1e-9;

/// One sampling step: propagate, inflate, test the invariant.
pub struct Stepper<'m> {
    model: &'m LhaModel,
    problem: Problem,
    budget: NumericsBudget,
    config: EngineConfig,
    v_bar: f64,
    mu_x: f64,
}

/// Image of a polygon's vertices under an affine flow, hulled.
pub(crate) fn flow_polytope(flow: &FlowMap, p: &Polytope) -> Result<Polytope, LinalgError> {
    let images: Vec<Point> = p.vertices().iter().map(|v| flow_point(flow, v)).collect();
    crate::geometry::convex_hull(&images).map_err(|_| LinalgError::NonFinite("propagated vertex"))
}

pub(crate) fn flow_point(flow: &FlowMap, x: &Point) -> Point {
    let y = flow.apply(&Vector::from_column_slice(&[x.x, x.y]));
    Point::new(y[0], y[1])
}

/// True when the previous ρ-inflated set was inside `Inv(l_c)°` and the
/// current one has left `Inv(l_c)` entirely.
pub fn detect_transition(prev_rho: &Polytope, cur_rho: &Polytope, from: LocationId, model: &LhaModel) -> bool {
    model.in_invariant_interior(prev_rho, from) && model.outside_invariant(cur_rho, from)
}

impl<'m> Stepper<'m> {
    pub fn new(model: &'m LhaModel, problem: Problem, budget: NumericsBudget, config: EngineConfig) -> Self {
        let mu_x = compute_mu_x(&budget, model.state_box(), model.locations().iter().map(|l| &l.u));
        Self {
            model,
            problem,
            budget,
            config,
            v_bar: v_bar(model),
            mu_x,
        }
    }

    pub fn v_bar(&self) -> f64 {
        self.v_bar
    }

    pub fn mu_x(&self) -> f64 {
        self.mu_x
    }

    /// Extra error charged on a jump on top of the step's `μ_x`.
    pub fn jump_charge(&self) -> f64 {
        self.mu_x + self.budget.mu_c + self.budget.mu_h
    }

    pub(crate) fn initial_unchecked(&self, init: &InitialCondition, delta: f64) -> ReachStep {
        let ball = linf_ball(&init.x0, delta).expect("δ is non-negative");
        ReachStep {
            k: 0,
            t: 0.0,
            location: init.location,
            d_hat_gamma: ball.clone(),
            d_hat: ball,
            rho: 0.0,
            jump_count: 0,
            params: StepParams {
                resume_step: 0,
                delta,
                gamma: 0.0,
                h: 0.0,
            },
            transition: None,
        }
    }

    /// Record 0: the initial ball, which must lie inside the interior of the
    /// initial invariant.
    pub fn initial(&self, init: &InitialCondition, delta: f64) -> Result<ReachStep, RunError> {
        if !(delta.is_finite() && delta >= 0.0) || !init.x0.iter().all(|v| v.is_finite()) {
            return Err(RunError::InvalidProblem(format!(
                "initial ball radius {delta} around {:?}",
                init.x0
            )));
        }
        let rec = self.initial_unchecked(init, delta);
        if !self.model.in_invariant_interior(&rec.d_hat, init.location) {
            return Err(RunError::InitialNotInterior { delta });
        }
        Ok(rec)
    }

    fn next_time(&self, t: f64, h: f64) -> f64 {
        let t_new = t + h;
        let horizon = self.problem.horizon;
        if (t_new - horizon).abs() <= 4.0 * f64::EPSILON * horizon.abs().max(1.0) {
            horizon
        } else {
            t_new
        }
    }

    fn check_step_size(&self, k: usize, h: f64, gamma: f64, rho: f64) -> Result<(), EngineError> {
        // h < (γ − ρ)/v̄, multiplied out so v̄ = 0 needs no special case.
        if h * self.v_bar >= gamma - rho {
            return Err(EngineError::new(
                ErrorKind::StepTooLarge,
                k,
                format!("h·v̄ = {:e} is not below γ − ρ = {:e}", h * self.v_bar, gamma - rho),
            ));
        }
        Ok(())
    }

    fn check_diameter(&self, k: usize, d_gamma: &Polytope) -> Result<(), EngineError> {
        let dia = d_gamma.diameter();
        if dia >= self.problem.epsilon {
            return Err(EngineError::new(
                ErrorKind::DiameterExceeded,
                k,
                format!("dia(D̂γ) = {dia} is not below ε = {}", self.problem.epsilon),
            ));
        }
        Ok(())
    }

    /// Computes record `prev.k + 1` or explains why it was rejected.
    pub fn post(&self, prev: &ReachStep, params: &StepParams) -> Result<ReachStep, StepError> {
        let k = prev.k + 1;
        let StepParams { gamma, h, .. } = *params;
        let from = prev.location;
        let loc = &self.model.locations()[from.0];

        let flow = FlowMap::new(&loc.a, &loc.u, h)?;
        let d_hat = flow_polytope(&flow, &prev.d_hat)?;
        let d_hat_gamma = d_hat.gamma_neighborhood(gamma);
        let rho = prev.rho + self.mu_x;
        self.check_step_size(k, h, gamma, rho)?;
        self.check_diameter(k, &d_hat_gamma)?;

        let t = self.next_time(prev.t, h);
        let d_rho = d_hat.gamma_neighborhood(rho);
        if self.model.in_invariant_interior(&d_rho, from) {
            trace!("step {k}: t = {t}, stay in {from}");
            return Ok(ReachStep {
                k,
                t,
                location: from,
                d_hat,
                d_hat_gamma,
                rho,
                jump_count: prev.jump_count,
                params: StepParams { resume_step: k, ..*params },
                transition: None,
            });
        }
        let prev_rho = prev.d_hat.gamma_neighborhood(prev.rho);
        if detect_transition(&prev_rho, &d_rho, from, self.model) {
            return self.jump(prev, params, rho, &d_rho, t);
        }
        Err(EngineError::new(
            ErrorKind::InvariantStraddle,
            k,
            format!("D̂ρ at t = {t} is neither inside Inv({from})° nor clear of it"),
        )
        .into())
    }

    fn jump(
        &self,
        prev: &ReachStep,
        params: &StepParams,
        rho: f64,
        d_rho: &Polytope,
        t: f64,
    ) -> Result<ReachStep, StepError> {
        let k = prev.k + 1;
        let StepParams { gamma, h, .. } = *params;
        let from = prev.location;
        let to = check_deterministic(d_rho, from, self.model, k)?;

        let refine = |m| refine_transition(self.model, &prev.d_hat, from, to, h, rho, self.v_bar, m, k);
        let refinement = match refine(self.config.substeps) {
            Err(RefineError::NoFlip) => refine(1),
            other => other,
        }
        .map_err(|e| match e {
            RefineError::Rejected(e) => StepError::Rejected(e),
            RefineError::Numerics(e) => StepError::Numerics(e),
            RefineError::NoFlip => unreachable!("a single sub-step needs no flip"),
        })?;

        // Condition (i) asks for a crossing set wider than 4v̄h. The tight
        // set is usually far narrower, so the test runs on a widened
        // superset; (ii) and (iii) on a superset are only stronger.
        let j_hat = &refinement.j_hat;
        let j_check = if h < (j_hat.diameter() / 2.0) / (2.0 * self.v_bar) {
            j_hat.clone()
        } else {
            let w = 2.0 * self.v_bar * h * (1.0 + WIDEN_SLACK);
            self.widen_on_facets(j_hat, from, to, &refinement.normal, w)
                .ok_or_else(|| EngineError::new(ErrorKind::NontransversalTransition, k, "widened crossing set left the facet"))?
        };
        check_transversal(&j_check, from, to, h, rho, self.model, self.v_bar, self.config.eps_trans, k)?;

        let rho = rho + self.jump_charge();
        self.check_step_size(k, h, gamma, rho)?;
        let d_hat = refinement.d_hat;
        let d_hat_gamma = d_hat.gamma_neighborhood(gamma);
        self.check_diameter(k, &d_hat_gamma)?;
        if !self.model.in_invariant_interior(&d_hat.gamma_neighborhood(rho), to) {
            return Err(EngineError::new(
                ErrorKind::InvariantStraddle,
                k,
                format!("post-jump D̂ρ at t = {t} is not inside Inv({to})°"),
            )
            .into());
        }

        let t0 = prev.t;
        let jump = prev.jump_count + 1;
        Ok(ReachStep {
            k,
            t,
            location: to,
            d_hat,
            d_hat_gamma,
            rho,
            jump_count: jump,
            params: StepParams { resume_step: k, ..*params },
            transition: Some(TransitionRecord {
                from,
                to,
                bracket: (t0 + refinement.bracket.0, (t0 + refinement.bracket.1).min(t)),
                estimate: (t0 + refinement.estimate.0, (t0 + refinement.estimate.1).min(t)),
                j_hat: refinement.j_hat,
                normal: [refinement.normal.x, refinement.normal.y],
                jump,
            }),
        })
    }

    /// `N_w(J) ∩ facets` over the shared facets with the crossing normal.
    fn widen_on_facets(
        &self,
        j: &Polytope,
        from: LocationId,
        to: LocationId,
        normal: &Point,
        w: f64,
    ) -> Option<Polytope> {
        let nb = j.gamma_neighborhood(w);
        let pts: Vec<Point> = self
            .model
            .shared_facets(from, to)
            .iter()
            .filter(|f| (f.normal() - normal).amax() <= 1e-12)
            .filter_map(|f| {
                let (a, b) = f.endpoints();
                nb.intersect_segment(&a, &b)
            })
            .flat_map(|piece| piece.vertices().to_vec())
            .collect();
        crate::geometry::convex_hull(&pts).ok()
    }
}
