use serde::{Deserialize, Serialize};

use super::{
    convex_hull, cross, linf_dist, square_corners, GeometryError, Halfspace, Inclusion, Membership,
    Point, GEOM_TOL,
};

/// Bounded convex polygon carried in vertex and halfspace form.
///
/// Vertices are counterclockwise extreme points. One vertex is a point, two
/// are a segment; the halfspace form of those degenerate shapes pins the
/// set down exactly (a zero-width slab plus end caps), so no point is ever
/// in their interior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<[f64; 2]>", try_from = "Vec<[f64; 2]>")]
pub struct Polytope {
    vertices: Vec<Point>,
    halfspaces: Vec<Halfspace>,
}

impl From<Polytope> for Vec<[f64; 2]> {
    fn from(p: Polytope) -> Self {
        p.vertices.iter().map(|v| [v.x, v.y]).collect()
    }
}

impl TryFrom<Vec<[f64; 2]>> for Polytope {
    type Error = GeometryError;

    /// Trusts the stored order, so serialised hulls round-trip bit for bit.
    fn try_from(raw: Vec<[f64; 2]>) -> Result<Self, Self::Error> {
        if raw.is_empty() {
            return Err(GeometryError::EmptyInput);
        }
        if raw.iter().flatten().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self::from_hull_vertices(
            raw.into_iter().map(|[x, y]| Point::new(x, y)).collect(),
        ))
    }
}

impl Polytope {
    /// Builds the halfspace form for vertices that are already a hull.
    pub(crate) fn from_hull_vertices(vertices: Vec<Point>) -> Self {
        let halfspaces = match vertices.len() {
            0 => unreachable!("hull output is never empty"),
            1 => {
                let p = vertices[0];
                vec![
                    Halfspace::from_unit(Point::new(1.0, 0.0), p.x),
                    Halfspace::from_unit(Point::new(-1.0, 0.0), -p.x),
                    Halfspace::from_unit(Point::new(0.0, 1.0), p.y),
                    Halfspace::from_unit(Point::new(0.0, -1.0), -p.y),
                ]
            }
            2 => {
                let (a, b) = (vertices[0], vertices[1]);
                let d = (b - a).normalize();
                let n = Point::new(d.y, -d.x);
                let (na, nb) = (n.dot(&a), n.dot(&b));
                vec![
                    Halfspace::from_unit(n, na.max(nb)),
                    Halfspace::from_unit(-n, -na.min(nb)),
                    Halfspace::from_unit(d, d.dot(&b)),
                    Halfspace::from_unit(-d, -d.dot(&a)),
                ]
            }
            k => (0..k)
                .map(|i| {
                    let (a, b) = (vertices[i], vertices[(i + 1) % k]);
                    let e = b - a;
                    let n = Point::new(e.y, -e.x).normalize();
                    Halfspace::from_unit(n, n.dot(&a).max(n.dot(&b)))
                })
                .collect(),
        };
        Self {
            vertices,
            halfspaces,
        }
    }

    pub fn dim(&self) -> usize {
        2
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    /// True for points and segments.
    pub fn is_degenerate(&self) -> bool {
        self.vertices.len() < 3
    }

    pub fn vertex_mean(&self) -> Point {
        self.vertices.iter().sum::<Point>() / self.vertices.len() as f64
    }

    /// Hull of the images of every vertex under `f`.
    pub fn map_vertices<E>(
        &self,
        mut f: impl FnMut(&Point) -> Result<Point, E>,
    ) -> Result<Polytope, E>
    where
        E: From<GeometryError>,
    {
        let images = self
            .vertices
            .iter()
            .map(&mut f)
            .collect::<Result<Vec<_>, E>>()?;
        Ok(convex_hull(&images)?)
    }

    pub fn contains(&self, x: &Point, mode: Membership) -> bool {
        match mode {
            Membership::Closed => self.halfspaces.iter().all(|h| h.eval(x) <= GEOM_TOL),
            Membership::Interior => self.halfspaces.iter().all(|h| h.eval(x) < -GEOM_TOL),
            Membership::Complement => self.halfspaces.iter().any(|h| h.eval(x) > GEOM_TOL),
        }
    }

    /// Vertex test; exact because both sets are convex.
    pub fn subset_of(&self, other: &Polytope, mode: Inclusion) -> bool {
        let m = match mode {
            Inclusion::Closed => Membership::Closed,
            Inclusion::Interior => Membership::Interior,
        };
        self.vertices.iter().all(|v| other.contains(v, m))
    }

    fn support_range(&self, axis: &Point) -> (f64, f64) {
        self.vertices
            .iter()
            .map(|v| axis.dot(v))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s), hi.max(s))
            })
    }

    /// True when the closed sets are separated by a gap wider than
    /// `GEOM_TOL`; touching sets are not disjoint.
    pub fn disjoint(&self, other: &Polytope) -> bool {
        self.halfspaces
            .iter()
            .chain(other.halfspaces.iter())
            .any(|h| {
                let (a_lo, a_hi) = self.support_range(h.normal());
                let (b_lo, b_hi) = other.support_range(h.normal());
                a_hi < b_lo - GEOM_TOL || b_hi < a_lo - GEOM_TOL
            })
    }

    /// Clip by one closed halfspace; `None` when nothing survives.
    ///
    /// Vertices within `GEOM_TOL` of the boundary are kept, so clipping a
    /// polygon against a neighbor that shares an edge yields that edge.
    pub fn intersect_halfspace(&self, h: &Halfspace) -> Option<Polytope> {
        if self.vertices.len() <= 2 {
            let a = self.vertices[0];
            let b = *self.vertices.last().unwrap();
            return clip_segment(&a, &b, std::slice::from_ref(h));
        }
        let k = self.vertices.len();
        let mut kept = Vec::with_capacity(k + 2);
        for i in 0..k {
            let a = &self.vertices[i];
            let b = &self.vertices[(i + 1) % k];
            let (ea, eb) = (h.eval(a), h.eval(b));
            if ea <= GEOM_TOL {
                kept.push(*a);
            }
            if (ea < -GEOM_TOL && eb > GEOM_TOL) || (ea > GEOM_TOL && eb < -GEOM_TOL) {
                let t = ea / (ea - eb);
                kept.push(a + (b - a) * t);
            }
        }
        if kept.is_empty() {
            return None;
        }
        convex_hull(&kept).ok()
    }

    /// Part of the segment `[a, b]` inside this polytope (closed, with
    /// tolerance). The result lies exactly on the segment's line.
    pub fn intersect_segment(&self, a: &Point, b: &Point) -> Option<Polytope> {
        clip_segment(a, b, &self.halfspaces)
    }

    pub fn intersect(&self, other: &Polytope) -> Option<Polytope> {
        if other.is_degenerate() {
            let (a, b) = (other.vertices[0], *other.vertices.last().unwrap());
            return self.intersect_segment(&a, &b);
        }
        other
            .halfspaces
            .iter()
            .try_fold(self.clone(), |acc, h| acc.intersect_halfspace(h))
    }

    /// ℓ∞ diameter: the largest coordinate extent.
    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounds();
        (hi.x - lo.x).max(hi.y - lo.y)
    }

    /// Componentwise min and max over the vertices.
    pub fn bounds(&self) -> (Point, Point) {
        let first = self.vertices[0];
        self.vertices.iter().skip(1).fold((first, first), |(lo, hi), v| {
            (lo.inf(v), hi.sup(v))
        })
    }

    pub fn area(&self) -> f64 {
        if self.is_degenerate() {
            return 0.0;
        }
        let o = self.vertices[0];
        let twice: f64 = self
            .vertices
            .windows(2)
            .skip(1)
            .map(|w| cross(&o, &w[0], &w[1]))
            .sum();
        (twice / 2.0).abs()
    }

    /// Closed ℓ∞ γ-neighborhood, built as the hull of the γ-squares around
    /// every vertex (equal to the Minkowski sum with `B_γ(0)`).
    ///
    /// # Panics
    /// If `gamma` is negative or not finite.
    pub fn gamma_neighborhood(&self, gamma: f64) -> Polytope {
        assert!(
            gamma.is_finite() && gamma >= 0.0,
            "neighborhood radius must be finite and non-negative, got {gamma}"
        );
        if gamma == 0.0 {
            return self.clone();
        }
        let corners: Vec<Point> = self
            .vertices
            .iter()
            .flat_map(|v| square_corners(v, gamma))
            .collect();
        convex_hull(&corners).expect("corners of finite vertices are finite")
    }

    /// ℓ∞ distance from `x` to the set; zero inside.
    pub fn distance_to(&self, x: &Point) -> f64 {
        if self.contains(x, Membership::Closed) {
            return 0.0;
        }
        let k = self.vertices.len();
        if k == 1 {
            return linf_dist(x, &self.vertices[0]);
        }
        let edges = if k == 2 { 1 } else { k };
        (0..edges)
            .map(|i| segment_distance(x, &self.vertices[i], &self.vertices[(i + 1) % k]))
            .fold(f64::INFINITY, f64::min)
    }

    /// ℓ∞ Hausdorff distance. For convex sets the one-sided suprema are
    /// attained at vertices.
    pub fn hausdorff(&self, other: &Polytope) -> f64 {
        let one_way = |p: &Polytope, q: &Polytope| {
            p.vertices
                .iter()
                .map(|v| q.distance_to(v))
                .fold(0.0, f64::max)
        };
        one_way(self, other).max(one_way(other, self))
    }
}

/// Parametric clip of `[a, b]` against closed halfspaces.
fn clip_segment(a: &Point, b: &Point, halfspaces: &[Halfspace]) -> Option<Polytope> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for h in halfspaces {
        let (ea, eb) = (h.eval(a), h.eval(b));
        let slope = eb - ea;
        if slope.abs() <= f64::EPSILON * (ea.abs() + eb.abs()) {
            if ea.max(eb) > GEOM_TOL {
                return None;
            }
            continue;
        }
        // ea + t·slope ≤ GEOM_TOL
        let t = (GEOM_TOL - ea) / slope;
        if slope > 0.0 {
            hi = hi.min(t);
        } else {
            lo = lo.max(t);
        }
        if lo > hi {
            return None;
        }
    }
    let d = b - a;
    let p = |t: f64| if t == 0.0 { *a } else if t == 1.0 { *b } else { a + d * t };
    convex_hull(&[p(lo), p(hi)]).ok()
}

/// ℓ∞ distance from `x` to the segment `[a, b]`.
///
/// `t ↦ ‖a + t(b − a) − x‖∞` is convex and piecewise linear, so its minimum
/// over `[0, 1]` sits at an end point or a kink: a zero of either coordinate
/// or a point where both coordinates have equal magnitude.
fn segment_distance(x: &Point, a: &Point, b: &Point) -> f64 {
    let d = b - a;
    let f = a - x;
    let mut candidates = vec![0.0, 1.0];
    let mut push = |num: f64, den: f64| {
        if den != 0.0 {
            let t = num / den;
            if t.is_finite() {
                candidates.push(t.clamp(0.0, 1.0));
            }
        }
    };
    push(-f.x, d.x);
    push(-f.y, d.y);
    push(-(f.x - f.y), d.x - d.y);
    push(-(f.x + f.y), d.x + d.y);
    candidates
        .into_iter()
        .map(|t| (f + d * t).amax())
        .fold(f64::INFINITY, f64::min)
}
