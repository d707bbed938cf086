use std::collections::VecDeque;
use std::fmt;

use serde::Serialize;

use super::{cell_facet, LhaModel};
use crate::geometry::Inclusion;

const AREA_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// A cell with (numerically) empty interior.
    EmptyCell { cell: String },
    CellOutsideBox { cell: String },
    /// The cells do not cover the state box.
    Coverage { covered: f64, box_area: f64 },
    InteriorOverlap { first: String, second: String, area: f64 },
    EmptyInvariant { location: String },
    DisconnectedInvariant { location: String, components: usize },
    /// A cell claimed by more than one location.
    SharedCell { cell: String, locations: Vec<String> },
    /// A cell claimed by no location.
    UncoveredCell { cell: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyCell { cell } => write!(f, "cell `{cell}` has empty interior"),
            Violation::CellOutsideBox { cell } => {
                write!(f, "cell `{cell}` extends outside the state box")
            }
            Violation::Coverage { covered, box_area } => write!(
                f,
                "cells cover area {covered} of a state box with area {box_area}"
            ),
            Violation::InteriorOverlap {
                first,
                second,
                area,
            } => write!(
                f,
                "cells `{first}` and `{second}` overlap (intersection area {area})"
            ),
            Violation::EmptyInvariant { location } => {
                write!(f, "location `{location}` has an empty invariant")
            }
            Violation::DisconnectedInvariant {
                location,
                components,
            } => write!(
                f,
                "invariant of `{location}` splits into {components} facet-connected components"
            ),
            Violation::SharedCell { cell, locations } => write!(
                f,
                "cell `{cell}` belongs to several invariants: {}",
                locations.join(", ")
            ),
            Violation::UncoveredCell { cell } => {
                write!(f, "cell `{cell}` belongs to no invariant")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the partition and invariant structure, collecting every violation.
pub fn validate(model: &LhaModel) -> ValidationReport {
    let mut violations = Vec::new();
    let cells = model.cells();
    let box_area = model.state_box().volume();
    let area_tol = AREA_REL_TOL * box_area;

    for c in cells {
        if c.polytope.area() <= area_tol {
            violations.push(Violation::EmptyCell {
                cell: c.name.clone(),
            });
        }
        if !c.polytope.subset_of(model.box_polytope(), Inclusion::Closed) {
            violations.push(Violation::CellOutsideBox {
                cell: c.name.clone(),
            });
        }
    }

    let mut overlap_area = 0.0;
    for (i, a) in cells.iter().enumerate() {
        for b in &cells[i + 1..] {
            let area = a.polytope.intersect(&b.polytope).map_or(0.0, |p| p.area());
            if area > area_tol {
                overlap_area += area;
                violations.push(Violation::InteriorOverlap {
                    first: a.name.clone(),
                    second: b.name.clone(),
                    area,
                });
            }
        }
    }

    // With pairwise-disjoint interiors inside the box, the area sum equals
    // the covered area; overlaps are subtracted to keep the figure honest.
    let covered: f64 = cells
        .iter()
        .filter_map(|c| c.polytope.intersect(model.box_polytope()))
        .map(|p| p.area())
        .sum::<f64>()
        - overlap_area;
    if (covered - box_area).abs() > area_tol {
        violations.push(Violation::Coverage { covered, box_area });
    }

    let mut owners: Vec<Vec<String>> = vec![Vec::new(); cells.len()];
    for l in model.locations() {
        let mut inv = l.invariant_cells.clone();
        inv.sort_unstable();
        inv.dedup();
        for &c in &inv {
            owners[c].push(l.name.clone());
        }
        if inv.is_empty() {
            violations.push(Violation::EmptyInvariant {
                location: l.name.clone(),
            });
            continue;
        }
        let components = count_components(model, &inv);
        if components > 1 {
            violations.push(Violation::DisconnectedInvariant {
                location: l.name.clone(),
                components,
            });
        }
    }
    for (c, who) in owners.into_iter().enumerate() {
        let cell = cells[c].name.clone();
        match who.len() {
            0 => violations.push(Violation::UncoveredCell { cell }),
            1 => {}
            _ => violations.push(Violation::SharedCell {
                cell,
                locations: who,
            }),
        }
    }

    ValidationReport { violations }
}

/// Connected components of the facet-adjacency graph over `inv`.
fn count_components(model: &LhaModel, inv: &[usize]) -> usize {
    let cells = model.cells();
    let k = inv.len();
    let adjacent = |a: usize, b: usize| cell_facet(cells, inv[a], inv[b]).is_some();
    let mut seen = vec![false; k];
    let mut components = 0;
    for start in 0..k {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(a) = queue.pop_front() {
            for b in 0..k {
                if !seen[b] && adjacent(a, b) {
                    seen[b] = true;
                    queue.push_back(b);
                }
            }
        }
    }
    components
}
