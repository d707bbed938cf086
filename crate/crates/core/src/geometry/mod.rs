//! Planar polyhedral kernel.
//!
//! Every set the engine manipulates is a bounded convex [`Polytope`] kept in
//! both vertex and halfspace form. Degenerate polytopes (a point, a segment)
//! are first-class values: crossing sets on an invariant facet are segments.
//!
//! Degeneracy decisions (vertex dedup, collinearity) use [`GEOM_TOL`].
//! Membership tests use the same tolerance with a conservative bias: the
//! closed test admits points within `GEOM_TOL` of the boundary, while the
//! interior and complement tests demand a margin of `GEOM_TOL`.

mod hull;
mod polytope;

pub use hull::convex_hull;
pub use polytope::Polytope;

use nalgebra::Vector2;
use thiserror::Error;

pub type Point = Vector2<f64>;

pub const GEOM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("convex hull of an empty point set")]
    EmptyInput,
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("radius must be finite and non-negative, got {0}")]
    NegativeRadius(f64),
    #[error("halfspace normal must be non-zero")]
    ZeroNormal,
    #[error("box bounds are inconsistent: {0}")]
    InvalidBox(String),
    #[error("operation only supported in dimension 2, got {0}")]
    UnsupportedDimension(usize),
    #[error("halfspace description is unbounded or empty")]
    Unbounded,
}

/// How a point is tested against a closed convex set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Closed,
    Interior,
    /// Outside the closed set.
    Complement,
}

/// How one convex set is tested for inclusion in another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inclusion {
    Closed,
    Interior,
}

pub fn linf_dist(a: &Point, b: &Point) -> f64 {
    (a - b).amax()
}

/// Twice the signed area of the triangle `(o, a, b)`; positive when
/// `o → a → b` turns counterclockwise.
pub(crate) fn cross(o: &Point, a: &Point, b: &Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Closed halfspace `normal · x ≤ offset` with a unit ℓ2 normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Halfspace {
    normal: Point,
    offset: f64,
}

impl Halfspace {
    /// Normalises `normal` (and scales `offset` with it).
    pub fn new(normal: Point, offset: f64) -> Result<Self, GeometryError> {
        if !normal.iter().all(|v| v.is_finite()) || !offset.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        let len = normal.norm();
        if len == 0.0 {
            return Err(GeometryError::ZeroNormal);
        }
        Ok(Self {
            normal: normal / len,
            offset: offset / len,
        })
    }

    pub(crate) fn from_unit(normal: Point, offset: f64) -> Self {
        Self { normal, offset }
    }

    pub fn normal(&self) -> &Point {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Signed slack `normal · x − offset`; non-positive inside.
    pub fn eval(&self, x: &Point) -> f64 {
        self.normal.dot(x) - self.offset
    }

    pub fn flipped(&self) -> Self {
        Self {
            normal: -self.normal,
            offset: -self.offset,
        }
    }
}

/// Axis-aligned box `lower ≤ x ≤ upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl AxisBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, GeometryError> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(GeometryError::InvalidBox(format!(
                "bound lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        if lower.iter().chain(&upper).any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if let Some(i) = (0..lower.len()).find(|&i| lower[i] > upper[i]) {
            return Err(GeometryError::InvalidBox(format!(
                "lower[{i}] = {} exceeds upper[{i}] = {}",
                lower[i], upper[i]
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// `max_{x ∈ box} ‖x‖∞`.
    pub fn max_inf_norm(&self) -> f64 {
        self.lower
            .iter()
            .chain(&self.upper)
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    pub fn to_polytope(&self) -> Result<Polytope, GeometryError> {
        if self.dim() != 2 {
            return Err(GeometryError::UnsupportedDimension(self.dim()));
        }
        let (l, u) = (&self.lower, &self.upper);
        convex_hull(&[
            Point::new(l[0], l[1]),
            Point::new(u[0], l[1]),
            Point::new(u[0], u[1]),
            Point::new(l[0], u[1]),
        ])
    }
}

/// Closed ℓ∞ ball `B_r(center)`, a square in the plane.
pub fn linf_ball(center: &Point, r: f64) -> Result<Polytope, GeometryError> {
    if !r.is_finite() || r < 0.0 {
        return Err(GeometryError::NegativeRadius(r));
    }
    if !center.iter().all(|v| v.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    convex_hull(&square_corners(center, r))
}

pub(crate) fn square_corners(c: &Point, r: f64) -> [Point; 4] {
    [
        Point::new(c.x - r, c.y - r),
        Point::new(c.x + r, c.y - r),
        Point::new(c.x + r, c.y + r),
        Point::new(c.x - r, c.y + r),
    ]
}

/// Convex polygon from a list of halfspaces, clipped to `bounds`.
///
/// Vertices are enumerated as pairwise intersections of boundary lines that
/// satisfy every constraint.
pub fn polytope_from_halfspaces(
    halfspaces: &[Halfspace],
    bounds: &AxisBox,
) -> Result<Polytope, GeometryError> {
    let mut all: Vec<Halfspace> = bounds.to_polytope()?.halfspaces().to_vec();
    all.extend_from_slice(halfspaces);
    let scale = bounds.max_inf_norm().max(1.0);
    let mut candidates = Vec::new();
    for (i, a) in all.iter().enumerate() {
        for b in &all[i + 1..] {
            let det = a.normal.x * b.normal.y - a.normal.y * b.normal.x;
            if det.abs() < GEOM_TOL {
                continue;
            }
            let x = (a.offset * b.normal.y - b.offset * a.normal.y) / det;
            let y = (a.normal.x * b.offset - b.normal.x * a.offset) / det;
            let p = Point::new(x, y);
            if all.iter().all(|h| h.eval(&p) <= GEOM_TOL * scale) {
                candidates.push(p);
            }
        }
    }
    if candidates.is_empty() {
        return Err(GeometryError::Unbounded);
    }
    convex_hull(&candidates)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halfspace_normalises() {
        let h = Halfspace::new(Point::new(3.0, 4.0), 10.0).unwrap();
        assert!((h.normal().norm() - 1.0).abs() < 1e-12);
        assert!((h.offset() - 2.0).abs() < 1e-15);
        assert!(h.eval(&Point::new(0.0, 0.0)) < 0.0);
        assert_eq!(
            Halfspace::new(Point::zeros(), 1.0).unwrap_err(),
            GeometryError::ZeroNormal
        );
    }

    #[test]
    fn box_validation() {
        assert!(AxisBox::new(vec![1.0], vec![0.0]).is_err());
        assert!(AxisBox::new(vec![0.0, 0.0], vec![1.0]).is_err());
        let b = AxisBox::new(vec![-8.0, -2.0], vec![3.0, 8.0]).unwrap();
        assert_eq!(b.max_inf_norm(), 8.0);
        assert_eq!(b.volume(), 110.0);
        assert!(b.contains(&[3.0, -2.0]));
        assert!(!b.contains(&[3.1, 0.0]));
    }

    #[test]
    fn unit_ball_and_degenerate_ball() {
        let sq = linf_ball(&Point::new(0.0, 0.0), 1.0).unwrap();
        assert_eq!(sq.vertices().len(), 4);
        for v in sq.vertices() {
            assert_eq!(v.x.abs(), 1.0);
            assert_eq!(v.y.abs(), 1.0);
        }
        let small = linf_ball(&Point::new(2.5, 6.0), 1e-5).unwrap();
        assert!((small.diameter() - 2e-5).abs() < 1e-15);
        let pt = linf_ball(&Point::new(1.0, 2.0), 0.0).unwrap();
        assert_eq!(pt.vertices(), &[Point::new(1.0, 2.0)]);
        assert!(matches!(
            linf_ball(&Point::zeros(), -1.0),
            Err(GeometryError::NegativeRadius(_))
        ));
    }

    #[test]
    fn halfspace_description_of_triangle() {
        let bounds = AxisBox::new(vec![-8.0, -8.0], vec![8.0, 8.0]).unwrap();
        // y ≥ |x|
        let hs = [
            Halfspace::new(Point::new(1.0, -1.0), 0.0).unwrap(),
            Halfspace::new(Point::new(-1.0, -1.0), 0.0).unwrap(),
        ];
        let tri = polytope_from_halfspaces(&hs, &bounds).unwrap();
        assert_eq!(tri.vertices().len(), 3);
        assert!((tri.area() - 64.0).abs() < 1e-10);
    }
}
