//! Jump confirmation: determinism, crossing-set refinement, transversality.

use thiserror::Error;

use super::post::{flow_point, flow_polytope};
use super::{EngineError, ErrorKind};
use crate::geometry::{convex_hull, Point, Polytope};
use crate::linalg::{FlowMap, LinalgError};
use crate::model::{LhaModel, LocationId};

const NORMAL_TOL: f64 = 1e-12;

/// The unique location `l_n ≠ l_c` whose invariant interior holds `cur_rho`.
pub fn check_deterministic(
    cur_rho: &Polytope,
    from: LocationId,
    model: &LhaModel,
    step: usize,
) -> Result<LocationId, EngineError> {
    let targets: Vec<LocationId> = model
        .location_ids()
        .filter(|&l| l != from && model.in_invariant_interior(cur_rho, l))
        .collect();
    match targets.as_slice() {
        [to] => Ok(*to),
        [] => Err(EngineError::new(
            ErrorKind::NondeterministicTransition,
            step,
            format!("no single invariant interior holds the set leaving {from}"),
        )),
        many => Err(EngineError::new(
            ErrorKind::NondeterministicTransition,
            step,
            format!("set leaving {from} lies in {} invariants", many.len()),
        )),
    }
}

/// Transversality of the jump `from → to` through the crossing set `j_hat`.
///
/// (i) `h < (dia(J)/2)/(2v̄)`; (ii) `N_r(J) ⊂ Inv_c ∪ Inv_n` for
/// `r = dia(J)/2 + ρ`; (iii) both vector fields cross every shared facet
/// outward with normal speed at least `eps_trans` on `N_r(J) ∩ facet`.
#[allow(clippy::too_many_arguments)]
pub fn check_transversal(
    j_hat: &Polytope,
    from: LocationId,
    to: LocationId,
    h: f64,
    rho: f64,
    model: &LhaModel,
    v_bar: f64,
    eps_trans: f64,
    step: usize,
) -> Result<(), EngineError> {
    let fail = |what: String| Err(EngineError::new(ErrorKind::NontransversalTransition, step, what));
    let dia = j_hat.diameter();
    if h * 2.0 * v_bar >= dia / 2.0 {
        return fail(format!("(i) h = {h:e} is not below dia(J)/(4v̄) = {:e}", dia / (4.0 * v_bar)));
    }
    let r = dia / 2.0 + rho;
    let nb = j_hat.gamma_neighborhood(r);
    if !model.in_invariant_union(&nb, from, to) {
        return fail(format!("(ii) the {r}-neighborhood of J leaves Inv({from}) ∪ Inv({to})"));
    }
    let (fc, fn_) = (model.location(from).ok(), model.location(to).ok());
    let (Some(fc), Some(fn_)) = (fc, fn_) else {
        return fail("unknown location".into());
    };
    let mut tested = 0;
    for facet in model.shared_facets(from, to) {
        let (a, b) = facet.endpoints();
        let Some(piece) = nb.intersect_segment(&a, &b) else {
            continue;
        };
        let n = facet.normal();
        for x in piece.vertices() {
            tested += 1;
            let (vc, vn) = (fc.field(x).dot(n), fn_.field(x).dot(n));
            if vc < eps_trans || vn < eps_trans {
                return fail(format!(
                    "(iii) normal speeds {vc:e} and {vn:e} at ({}, {}) are below {eps_trans:e}",
                    x.x, x.y
                ));
            }
        }
    }
    if tested == 0 {
        return fail("(iii) the crossing set does not meet a shared facet".into());
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RefineError {
    #[error("area dominance never flips across the sub-steps")]
    NoFlip,
    #[error(transparent)]
    Rejected(#[from] EngineError),
    #[error(transparent)]
    Numerics(#[from] LinalgError),
}

/// Output of [`refine_transition`]. Times are offsets from the start of the
/// sampling interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub substeps: usize,
    /// Sub-step `m*` at whose end the target invariant holds more area.
    pub flip: usize,
    /// `(s_{m*}, s_{m*+1})`.
    pub estimate: (f64, f64),
    /// Sub-steps `m_lo ≤ m* < m_hi`: all of the set is still inside the
    /// source interior at `s_{m_lo}` and clear of the source at `s_{m_hi}`.
    pub window: (usize, usize),
    /// `(s_{m_lo}, s_{m_hi})`.
    pub bracket: (f64, f64),
    /// Over-approximate crossing set, a segment on the shared facet.
    pub j_hat: Polytope,
    pub normal: Point,
    /// Over-approximation of the set at the end of the interval.
    pub d_hat: Polytope,
}

/// Localises the jump inside `[0, h]` with `M` sub-steps of width `Δh`.
///
/// The source flow is sampled at `s_m = mΔh`. The crossing set is the
/// union over the window of `N(D_{m+1}, 2v̄Δh + ρ) ∩ facet`; each piece is
/// then carried by the target flow for `h − s_{m+1}` and the hull is
/// inflated by `v̄Δh` to cover the unknown crossing instant within its
/// sub-step.
#[allow(clippy::too_many_arguments)]
pub fn refine_transition(
    model: &LhaModel,
    start: &Polytope,
    from: LocationId,
    to: LocationId,
    h: f64,
    rho: f64,
    v_bar: f64,
    substeps: usize,
    step: usize,
) -> Result<Refinement, RefineError> {
    let m_total = substeps.max(1);
    let dh = h / m_total as f64;
    let s = |m: usize| if m == m_total { h } else { h * m as f64 / m_total as f64 };
    let (lc, ln) = (&model.locations()[from.0], &model.locations()[to.0]);

    let mut cache: Vec<Option<Polytope>> = vec![None; m_total + 1];
    let mut inflated = |m: usize| -> Result<Polytope, LinalgError> {
        if cache[m].is_none() {
            let d = if m == 0 {
                start.clone()
            } else {
                flow_polytope(&FlowMap::new(&lc.a, &lc.u, s(m))?, start)?
            };
            cache[m] = Some(d);
        }
        Ok(cache[m].as_ref().expect("filled").gamma_neighborhood(rho))
    };

    let flip = if m_total == 1 {
        0
    } else {
        let mut found = None;
        let mut here = {
            let p = inflated(0)?;
            (model.area_in_invariant(&p, from), model.area_in_invariant(&p, to))
        };
        for m in 0..m_total {
            let p = inflated(m + 1)?;
            let next = (model.area_in_invariant(&p, from), model.area_in_invariant(&p, to));
            if here.0 >= here.1 && next.0 < next.1 {
                found = Some(m);
                break;
            }
            here = next;
        }
        found.ok_or(RefineError::NoFlip)?
    };

    let mut m_lo = 0;
    for m in (0..=flip).rev() {
        if model.in_invariant_interior(&inflated(m)?, from) {
            m_lo = m;
            break;
        }
    }
    let mut m_hi = m_total;
    for m in flip + 1..=m_total {
        if model.outside_invariant(&inflated(m)?, from) {
            m_hi = m;
            break;
        }
    }
    for m in m_lo..=m_hi {
        if !model.in_invariant_union(&inflated(m)?, from, to) {
            return Err(EngineError::new(
                ErrorKind::NondeterministicTransition,
                step,
                format!("flow sampled at sub-step {m} leaves Inv({from}) ∪ Inv({to})"),
            )
            .into());
        }
    }

    let facets = model.shared_facets(from, to);
    let gamma_p = 2.0 * v_bar * dh;
    let mut pieces: Vec<(usize, Polytope)> = Vec::new();
    let mut normal: Option<Point> = None;
    for m in m_lo..m_hi {
        let big = cache[m + 1].as_ref().expect("computed above").gamma_neighborhood(gamma_p + rho);
        for f in &facets {
            let (a, b) = f.endpoints();
            let Some(piece) = big.intersect_segment(&a, &b) else {
                continue;
            };
            match normal {
                None => normal = Some(*f.normal()),
                Some(n) if (n - f.normal()).amax() > NORMAL_TOL => {
                    return Err(EngineError::new(
                        ErrorKind::NontransversalTransition,
                        step,
                        "crossing set spans facets with different normals",
                    )
                    .into())
                }
                Some(_) => {}
            }
            pieces.push((m, piece));
        }
    }
    let Some(normal) = normal else {
        return Err(EngineError::new(ErrorKind::NontransversalTransition, step, "empty crossing set").into());
    };

    let on_facet: Vec<Point> = pieces.iter().flat_map(|(_, p)| p.vertices().to_vec()).collect();
    let j_hat = convex_hull(&on_facet).map_err(|_| LinalgError::NonFinite("crossing set"))?;

    let mut landed = Vec::with_capacity(on_facet.len());
    let mut last: Option<(usize, FlowMap)> = None;
    for (m, piece) in &pieces {
        if last.as_ref().is_none_or(|(lm, _)| lm != m) {
            last = Some((*m, FlowMap::new(&ln.a, &ln.u, h - s(m + 1))?));
        }
        let flow = &last.as_ref().expect("set above").1;
        landed.extend(piece.vertices().iter().map(|v| flow_point(flow, v)));
    }
    let d_hat = convex_hull(&landed)
        .map_err(|_| LinalgError::NonFinite("post-jump set"))?
        .gamma_neighborhood(v_bar * dh);

    Ok(Refinement {
        substeps: m_total,
        flip,
        estimate: (s(flip), s(flip + 1)),
        window: (m_lo, m_hi),
        bracket: (s(m_lo), s(m_hi)),
        j_hat,
        normal,
        d_hat,
    })
}
