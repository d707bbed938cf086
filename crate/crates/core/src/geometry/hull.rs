use std::cmp::Ordering;

use super::{cross, GeometryError, Point, Polytope, GEOM_TOL};

/// Convex hull by Andrew's monotone chain.
///
/// The result is counterclockwise and starts at the lexicographically
/// smallest vertex. Interior, duplicate and collinear points are dropped, so
/// collinear input collapses to a segment and coincident input to a point.
pub fn convex_hull(points: &[Point]) -> Result<Polytope, GeometryError> {
    if points.is_empty() {
        return Err(GeometryError::EmptyInput);
    }
    if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(GeometryError::NonFinite);
    }

    let scale = points
        .iter()
        .fold(1.0f64, |m, p| m.max(p.x.abs()).max(p.y.abs()));
    let dup_tol = GEOM_TOL * scale;

    let mut pts = points.to_vec();
    pts.sort_by(|a, b| match a.x.total_cmp(&b.x) {
        Ordering::Equal => a.y.total_cmp(&b.y),
        o => o,
    });
    pts.dedup_by(|b, a| super::linf_dist(a, b) <= dup_tol);

    if pts.len() <= 2 {
        if pts.len() == 2 && super::linf_dist(&pts[0], &pts[1]) <= dup_tol {
            pts.truncate(1);
        }
        return Ok(Polytope::from_hull_vertices(pts));
    }

    // Pop while `o → a → b` fails to turn strictly left, with a relative
    // tolerance on the sine of the turn angle.
    let keeps_left = |o: &Point, a: &Point, b: &Point| {
        let c = cross(o, a, b);
        c > GEOM_TOL * (a - o).norm() * (b - o).norm()
    };

    let mut lower: Vec<Point> = Vec::with_capacity(pts.len());
    for p in &pts {
        while lower.len() >= 2 && !keeps_left(&lower[lower.len() - 2], &lower[lower.len() - 1], p) {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<Point> = Vec::with_capacity(pts.len());
    for p in pts.iter().rev() {
        while upper.len() >= 2 && !keeps_left(&upper[upper.len() - 2], &upper[upper.len() - 1], p) {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);

    let mut hull: Vec<Point> = Vec::with_capacity(lower.len());
    for p in lower {
        if hull.last().is_none_or(|q| super::linf_dist(q, &p) > dup_tol) {
            hull.push(p);
        }
    }
    while hull.len() > 1 && super::linf_dist(&hull[0], hull.last().unwrap()) <= dup_tol {
        hull.pop();
    }
    Ok(Polytope::from_hull_vertices(hull))
}
