//! Reference simulator for single executions.
//!
//! Fixed-step classical RK4 inside each location, with exits from the
//! closed invariant located by bisection on a re-integrated partial step.
//! Nothing here touches the matrix exponential: agreement with the engine
//! is evidence, not a tautology.

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{Halfspace, Point};
use crate::model::{InitialCondition, LhaModel, Location, LocationId, ModelError};

pub const BISECTION_TOL: f64 = 1e-12;
pub const ZENO_GAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("step must be finite and positive, got {0}")]
    InvalidStep(f64),
    #[error("horizon must be finite and non-negative, got {0}")]
    InvalidHorizon(f64),
    #[error("initial state is outside the invariant of {0}")]
    InitialOutside(LocationId),
    #[error("trajectory left the state box at t = {t}")]
    LeftStateBox { t: f64 },
    #[error("crossing at t = {t} from {from} enters {} invariants", candidates.len())]
    Nondeterministic {
        t: f64,
        from: LocationId,
        candidates: Vec<LocationId>,
    },
    #[error("trajectory leaves {from} at t = {t} into no invariant")]
    Deadlock { t: f64, from: LocationId },
    #[error("no crossing of the facet before t = {0}")]
    NoCrossing(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub x: [f64; 2],
    pub location: LocationId,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    pub from: LocationId,
    pub to: LocationId,
    pub point: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    /// Two events closer than [`ZENO_GAP`].
    pub zeno_suspected: bool,
}

impl Trace {
    /// Linear interpolation between the samples around `t`, clamped to
    /// the recorded range.
    pub fn state_at(&self, t: f64) -> Point {
        let s = &self.samples;
        let i = s.partition_point(|p| p.t <= t);
        if i == 0 {
            return Point::from(s[0].x);
        }
        if i == s.len() {
            return Point::from(s[s.len() - 1].x);
        }
        let (a, b) = (&s[i - 1], &s[i]);
        let w = (t - a.t) / (b.t - a.t);
        Point::from(a.x) * (1.0 - w) + Point::from(b.x) * w
    }
}

fn rk4(loc: &Location, x: &Point, dt: f64) -> Point {
    let k1 = loc.field(x);
    let k2 = loc.field(&(x + k1 * (dt / 2.0)));
    let k3 = loc.field(&(x + k2 * (dt / 2.0)));
    let k4 = loc.field(&(x + k3 * dt));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

fn check_step(step: f64, horizon: f64) -> Result<(), OracleError> {
    if !(step.is_finite() && step > 0.0) {
        return Err(OracleError::InvalidStep(step));
    }
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(OracleError::InvalidHorizon(horizon));
    }
    Ok(())
}

/// Smallest `θ ∈ (0, dt]` (to within [`BISECTION_TOL`]) with `outside(rk4(x, θ))`,
/// given that `outside` fails at 0 and holds at `dt`.
fn bisect(loc: &Location, x: &Point, dt: f64, outside: impl Fn(&Point) -> bool) -> (f64, Point) {
    let (mut lo, mut hi) = (0.0, dt);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if outside(&rk4(loc, x, mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (hi, rk4(loc, x, hi))
}

/// Simulates from `init` up to `horizon` or the `max_jumps`-th event,
/// sampling on the grid `t_i = i·step` plus every event instant.
pub fn simulate(
    model: &LhaModel,
    init: &InitialCondition,
    horizon: f64,
    max_jumps: usize,
    step: f64,
) -> Result<Trace, OracleError> {
    check_step(step, horizon)?;
    model.location(init.location)?;
    if !model.invariant_contains(init.location, &init.x0) {
        return Err(OracleError::InitialOutside(init.location));
    }
    let in_box = |x: &Point| model.state_box().contains(&[x.x, x.y]);

    let mut cur = init.location;
    let mut x = init.x0;
    let mut t = 0.0;
    let mut grid = 0u64;
    let mut samples = vec![Sample {
        t,
        x: x.into(),
        location: cur,
    }];
    let mut events: Vec<Event> = Vec::new();

    while t < horizon && events.len() < max_jumps {
        grid += 1;
        let t_next = (grid as f64 * step).min(horizon);
        if t_next <= t {
            continue;
        }
        let dt = t_next - t;
        let loc = &model.locations()[cur.0];
        let y = rk4(loc, &x, dt);
        let leaves = |p: &Point| !in_box(p) || !model.invariant_contains(cur, p);
        if !leaves(&y) {
            x = y;
            t = t_next;
            samples.push(Sample {
                t,
                x: x.into(),
                location: cur,
            });
            continue;
        }

        let (theta, p) = bisect(loc, &x, dt, leaves);
        let te = t + theta;
        if !in_box(&p) {
            return Err(OracleError::LeftStateBox { t: te });
        }
        let candidates: Vec<LocationId> = model.locate(&p)?.into_iter().filter(|&l| l != cur).collect();
        let to = match candidates.as_slice() {
            [to] => *to,
            [] => return Err(OracleError::Deadlock { t: te, from: cur }),
            _ => {
                return Err(OracleError::Nondeterministic {
                    t: te,
                    from: cur,
                    candidates,
                })
            }
        };
        events.push(Event {
            t: te,
            from: cur,
            to,
            point: p.into(),
        });
        samples.push(Sample {
            t: te,
            x: p.into(),
            location: to,
        });
        cur = to;
        x = p;
        t = te;
        // Re-enter the regular grid on the next pass.
        grid -= 1;
    }

    let zeno_suspected = events.windows(2).any(|w| w[1].t - w[0].t < ZENO_GAP);
    Ok(Trace {
        samples,
        events,
        zeno_suspected,
    })
}

/// First time the flow of the initial location carries `init.x0` across
/// `facet` (from `eval ≤ 0` to `eval > 0`).
pub fn crossing_time(
    model: &LhaModel,
    init: &InitialCondition,
    facet: &Halfspace,
    horizon: f64,
    step: f64,
) -> Result<f64, OracleError> {
    check_step(step, horizon)?;
    let loc = model.location(init.location)?;
    let mut x = init.x0;
    let mut t = 0.0;
    let mut i = 0u64;
    let crossed = |p: &Point| facet.eval(p) > 0.0;
    while t < horizon {
        i += 1;
        let t_next = (i as f64 * step).min(horizon);
        let dt = t_next - t;
        let y = rk4(loc, &x, dt);
        if crossed(&y) {
            let (theta, _) = bisect(loc, &x, dt, crossed);
            return Ok(t + theta);
        }
        x = y;
        t = t_next;
    }
    Err(OracleError::NoCrossing(horizon))
}
