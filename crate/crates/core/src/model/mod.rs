//! Linear hybrid automaton data model.
//!
//! The state box is partitioned into convex cells; each location owns a set
//! of cells as its invariant and carries constant dynamics `ẋ = Ax + u`.
//! Guards are implicit: a jump is enabled exactly on the facets shared by
//! two invariants, and the continuous state is never reset.

mod catalog;
mod validate;

pub use catalog::{drift_model, quadrant_model};
pub use validate::{validate, ValidationReport, Violation};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{AxisBox, GeometryError, Halfspace, Membership, Point, Polytope};
use crate::linalg::{Mat, Vector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("model has no {0}")]
    Empty(&'static str),
    #[error("only planar models are supported, got dimension {0}")]
    UnsupportedDimension(usize),
    #[error("location `{location}`: {what} has shape {got}, expected {expected}")]
    Shape {
        location: String,
        what: &'static str,
        got: String,
        expected: String,
    },
    #[error("location `{location}` has a non-finite {what}")]
    NonFinite {
        location: String,
        what: &'static str,
    },
    #[error("location `{location}` references cell {cell}, but only {count} cells exist")]
    UnknownCell {
        location: String,
        cell: usize,
        count: usize,
    },
    #[error("duplicate {what} name `{name}`")]
    DuplicateName { what: &'static str, name: String },
    #[error("unknown location {0}")]
    UnknownLocation(LocationId),
    #[error("point {0:?} lies outside the state box")]
    OutsideStateBox([f64; 2]),
    #[error("locations {0} and {1} share no facet")]
    NotAdjacent(LocationId, LocationId),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LocationId(pub usize);

impl fmt::Display for LocationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub name: String,
    pub polytope: Polytope,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Location {
    pub name: String,
    pub a: Mat,
    pub u: Vector,
    /// Indices into [`LhaModel::cells`].
    pub invariant_cells: Vec<usize>,
}

impl Location {
    /// Vector field `A x + u` at a planar point.
    pub fn field(&self, x: &Point) -> Point {
        Point::new(
            self.a[(0, 0)] * x.x + self.a[(0, 1)] * x.y + self.u[0],
            self.a[(1, 0)] * x.x + self.a[(1, 1)] * x.y + self.u[1],
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition {
    pub location: LocationId,
    pub x0: Point,
}

/// A facet shared by two invariants: the segment and its supporting line,
/// with the normal pointing out of the first invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedFacet {
    pub segment: Polytope,
    pub hyperplane: Halfspace,
}

impl SharedFacet {
    pub fn endpoints(&self) -> (Point, Point) {
        let v = self.segment.vertices();
        (v[0], v[v.len() - 1])
    }

    pub fn normal(&self) -> &Point {
        self.hyperplane.normal()
    }
}

/// A structurally well-formed automaton. Semantic properties (partition,
/// connectivity) are checked separately by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct LhaModel {
    state_box: AxisBox,
    box_polytope: Polytope,
    cells: Vec<Cell>,
    locations: Vec<Location>,
}

impl LhaModel {
    pub fn new(
        state_box: AxisBox,
        cells: Vec<Cell>,
        locations: Vec<Location>,
    ) -> Result<Self, ModelError> {
        if state_box.dim() != 2 {
            return Err(ModelError::UnsupportedDimension(state_box.dim()));
        }
        if cells.is_empty() {
            return Err(ModelError::Empty("cells"));
        }
        if locations.is_empty() {
            return Err(ModelError::Empty("locations"));
        }
        check_unique("cell", cells.iter().map(|c| c.name.as_str()))?;
        check_unique("location", locations.iter().map(|l| l.name.as_str()))?;
        for l in &locations {
            let shape = |what, got: String| ModelError::Shape {
                location: l.name.clone(),
                what,
                got,
                expected: "2x2 / 2".into(),
            };
            if l.a.nrows() != 2 || l.a.ncols() != 2 {
                return Err(shape("A", format!("{}x{}", l.a.nrows(), l.a.ncols())));
            }
            if l.u.len() != 2 {
                return Err(shape("u", l.u.len().to_string()));
            }
            if l.a.iter().chain(l.u.iter()).any(|v| !v.is_finite()) {
                return Err(ModelError::NonFinite {
                    location: l.name.clone(),
                    what: "dynamics entry",
                });
            }
            if let Some(&c) = l.invariant_cells.iter().find(|&&c| c >= cells.len()) {
                return Err(ModelError::UnknownCell {
                    location: l.name.clone(),
                    cell: c,
                    count: cells.len(),
                });
            }
        }
        let box_polytope = state_box.to_polytope()?;
        Ok(Self {
            state_box,
            box_polytope,
            cells,
            locations,
        })
    }

    pub fn dim(&self) -> usize {
        2
    }

    pub fn state_box(&self) -> &AxisBox {
        &self.state_box
    }

    pub fn box_polytope(&self) -> &Polytope {
        &self.box_polytope
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn location_ids(&self) -> impl Iterator<Item = LocationId> {
        (0..self.locations.len()).map(LocationId)
    }

    pub fn location(&self, id: LocationId) -> Result<&Location, ModelError> {
        self.locations
            .get(id.0)
            .ok_or(ModelError::UnknownLocation(id))
    }

    pub fn location_by_name(&self, name: &str) -> Option<LocationId> {
        self.locations
            .iter()
            .position(|l| l.name == name)
            .map(LocationId)
    }

    fn invariant(&self, id: LocationId) -> impl Iterator<Item = &Polytope> {
        self.locations[id.0]
            .invariant_cells
            .iter()
            .map(|&c| &self.cells[c].polytope)
    }

    /// Cells outside the given invariants.
    fn cells_outside<'a>(&'a self, ids: &'a [LocationId]) -> impl Iterator<Item = &'a Polytope> {
        self.cells.iter().enumerate().filter_map(move |(i, c)| {
            let owned = ids
                .iter()
                .any(|id| self.locations[id.0].invariant_cells.contains(&i));
            (!owned).then_some(&c.polytope)
        })
    }

    /// Every location whose closed invariant contains `x`.
    pub fn locate(&self, x: &Point) -> Result<Vec<LocationId>, ModelError> {
        if !self.state_box.contains(&[x.x, x.y]) {
            return Err(ModelError::OutsideStateBox([x.x, x.y]));
        }
        Ok(self
            .location_ids()
            .filter(|&l| self.invariant_contains(l, x))
            .collect())
    }

    /// Closed membership of a point in `Inv(l)`.
    pub fn invariant_contains(&self, l: LocationId, x: &Point) -> bool {
        self.invariant(l).any(|c| c.contains(x, Membership::Closed))
    }

    /// `P ⊂ Inv(l)°`: strictly inside the box and clear of every cell that
    /// belongs to another invariant.
    pub fn in_invariant_interior(&self, p: &Polytope, l: LocationId) -> bool {
        p.subset_of(&self.box_polytope, crate::geometry::Inclusion::Interior)
            && self.cells_outside(&[l]).all(|c| p.disjoint(c))
    }

    /// `P ∩ Inv(l) = ∅` (with a `GEOM_TOL` gap).
    pub fn outside_invariant(&self, p: &Polytope, l: LocationId) -> bool {
        self.invariant(l).all(|c| p.disjoint(c))
    }

    /// `P ⊂ Inv(c) ∪ Inv(n)`.
    pub fn in_invariant_union(&self, p: &Polytope, c: LocationId, n: LocationId) -> bool {
        p.subset_of(&self.box_polytope, crate::geometry::Inclusion::Closed)
            && self.cells_outside(&[c, n]).all(|cell| p.disjoint(cell))
    }

    /// `area(P ∩ Inv(l))`.
    pub fn area_in_invariant(&self, p: &Polytope, l: LocationId) -> f64 {
        self.invariant(l)
            .filter_map(|c| p.intersect(c))
            .map(|q| q.area())
            .sum()
    }

    /// All facets shared by `Inv(c)` and `Inv(n)`, normals pointing out of
    /// `Inv(c)`.
    pub fn shared_facets(&self, c: LocationId, n: LocationId) -> Vec<SharedFacet> {
        let mut out = Vec::new();
        for &i in &self.locations[c.0].invariant_cells {
            for &j in &self.locations[n.0].invariant_cells {
                if i == j {
                    continue;
                }
                let Some(facet) = cell_facet(&self.cells, i, j) else {
                    continue;
                };
                out.push(orient_facet(facet, &self.cells[i].polytope));
            }
        }
        out
    }

    /// The first shared facet, normal pointing out of `Inv(c)`.
    pub fn shared_facet(&self, c: LocationId, n: LocationId) -> Result<SharedFacet, ModelError> {
        self.location(c)?;
        self.location(n)?;
        self.shared_facets(c, n)
            .into_iter()
            .next()
            .ok_or(ModelError::NotAdjacent(c, n))
    }
}

fn check_unique<'a>(what: &'static str, names: impl Iterator<Item = &'a str>) -> Result<(), ModelError> {
    let mut seen = std::collections::HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(ModelError::DuplicateName {
                what,
                name: n.to_string(),
            });
        }
    }
    Ok(())
}

/// Contacts shorter than this are corners, not facets.
const MIN_FACET_LENGTH: f64 = 1e-9;

/// Shared edge of two cells, computed in index order so that both query
/// directions see bit-identical endpoints.
pub(crate) fn cell_facet(cells: &[Cell], i: usize, j: usize) -> Option<Polytope> {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    let common = cells[a].polytope.intersect(&cells[b].polytope)?;
    (common.vertices().len() == 2 && common.diameter() > MIN_FACET_LENGTH).then_some(common)
}

/// Canonical unit normal of a segment, flipped to point away from `cell`.
fn orient_facet(segment: Polytope, cell: &Polytope) -> SharedFacet {
    let (p, q) = (segment.vertices()[0], segment.vertices()[1]);
    let d = (q - p).normalize();
    let mut normal = Point::new(d.y, -d.x);
    if normal.dot(&(cell.vertex_mean() - p)) > 0.0 {
        normal = -normal;
    }
    let hyperplane =
        Halfspace::new(normal, normal.dot(&p)).expect("segment of positive length");
    SharedFacet {
        segment,
        hyperplane,
    }
}
