//! Built-in example automata.

use super::{Cell, LhaModel, Location};
use crate::geometry::{convex_hull, AxisBox, Point};
use crate::linalg::{Mat, Vector};

fn triangle(name: &str, pts: [(f64, f64); 3]) -> Cell {
    let pts: Vec<Point> = pts.iter().map(|&(x, y)| Point::new(x, y)).collect();
    Cell {
        name: name.into(),
        polytope: convex_hull(&pts).expect("finite corners"),
    }
}

fn location(name: &str, a: [f64; 4], u: [f64; 2], cell: usize) -> Location {
    Location {
        name: name.into(),
        a: Mat::from_row_slice(2, 2, &a),
        u: Vector::from_row_slice(&u),
        invariant_cells: vec![cell],
    }
}

/// Four-location spiral on `[−8, 8]²`, split along the diagonals.
///
/// `Up` owns `y ≥ |x|`, `Left` owns `x ≤ −|y|`, `Down` owns `y ≤ −|x|` and
/// `Right` owns `x ≥ |y|`. Every location spirals inward counterclockwise,
/// so a trajectory cycles Up → Left → Down → Right → Up.
pub fn quadrant_model() -> LhaModel {
    let r = 8.0;
    let cells = vec![
        triangle("up", [(0.0, 0.0), (r, r), (-r, r)]),
        triangle("left", [(0.0, 0.0), (-r, r), (-r, -r)]),
        triangle("down", [(0.0, 0.0), (-r, -r), (r, -r)]),
        triangle("right", [(0.0, 0.0), (r, -r), (r, r)]),
    ];
    let vertical = [-0.2, -1.0, 3.0, -0.2];
    let horizontal = [-0.2, -3.0, 1.0, -0.2];
    let locations = vec![
        location("Up", vertical, [0.1, 0.1], 0),
        location("Down", vertical, [-0.2, -0.2], 2),
        location("Left", horizontal, [0.15, 0.15], 1),
        location("Right", horizontal, [0.3, 0.3], 3),
    ];
    LhaModel::new(
        AxisBox::new(vec![-r, -r], vec![r, r]).expect("valid box"),
        cells,
        locations,
    )
    .expect("catalog model is well formed")
}

/// One location with constant field `(1, 0)` on `[−1, 2] × [−1, 1]`.
pub fn drift_model() -> LhaModel {
    let bx = AxisBox::new(vec![-1.0, -1.0], vec![2.0, 1.0]).expect("valid box");
    let cell = Cell {
        name: "all".into(),
        polytope: bx.to_polytope().expect("planar box"),
    };
    LhaModel::new(
        bx,
        vec![cell],
        vec![location("Drift", [0.0; 4], [1.0, 0.0], 0)],
    )
    .expect("catalog model is well formed")
}

#[cfg(test)]
mod tests {
    use super::super::{validate, LocationId};
    use super::*;

    #[test]
    fn catalog_models_validate() {
        assert!(validate(&quadrant_model()).is_valid());
        assert!(validate(&drift_model()).is_valid());
    }

    #[test]
    fn quadrant_diagonal_facet() {
        let m = quadrant_model();
        let up = m.location_by_name("Up").unwrap();
        let left = m.location_by_name("Left").unwrap();
        let f = m.shared_facet(up, left).unwrap();
        let s = 0.5f64.sqrt();
        // Facet along y = −x, x ≤ 0; outward from Up is (−1, −1)/√2.
        assert!((f.normal() - Point::new(-s, -s)).amax() < 1e-15);
        let back = m.shared_facet(left, up).unwrap();
        assert_eq!(*back.normal(), -*f.normal());
        assert_eq!(m.locate(&Point::new(0.0, 0.0)).unwrap().len(), 4);
        assert_eq!(m.locate(&Point::new(2.5, 6.0)).unwrap(), vec![LocationId(0)]);
    }
}
