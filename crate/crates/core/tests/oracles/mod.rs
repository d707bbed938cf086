//! Independent reference implementations used only by tests.
//!
//! Nothing here calls into the crate's geometry or linear algebra; each
//! oracle is the slow, obvious version of the thing it checks.
#![allow(dead_code)]

use rand::Rng;

pub type P2 = [f64; 2];

pub fn orient(o: P2, a: P2, b: P2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn on_segment(p: P2, a: P2, b: P2) -> bool {
    orient(a, b, p) == 0.0
        && p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

fn in_triangle(p: P2, a: P2, b: P2, c: P2) -> bool {
    let (d1, d2, d3) = (orient(a, b, p), orient(b, c, p), orient(c, a, p));
    let neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    let pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    !(neg && pos)
}

/// Extreme points of a point set, by exhaustive Carathéodory search.
///
/// A point is extreme unless it lies in a (possibly degenerate) triangle of
/// other points. Exact for integer-valued coordinates. Sorted, deduplicated.
pub fn brute_extreme_points(points: &[P2]) -> Vec<P2> {
    let mut s: Vec<P2> = points.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s.dedup();
    let n = s.len();
    let mut out = Vec::new();
    'p: for i in 0..n {
        let p = s[i];
        let others: Vec<P2> = (0..n).filter(|&j| j != i).map(|j| s[j]).collect();
        let m = others.len();
        for a in 0..m {
            for b in a + 1..m {
                if on_segment(p, others[a], others[b]) {
                    continue 'p;
                }
                for c in b + 1..m {
                    if orient(others[a], others[b], others[c]) != 0.0
                        && in_triangle(p, others[a], others[b], others[c])
                    {
                        continue 'p;
                    }
                }
            }
        }
        out.push(p);
    }
    out
}

/// Clips a counterclockwise convex polygon to `n·x ≤ b` by walking its
/// edges. Returns the surviving vertex chain (possibly with repeats).
pub fn edge_walk_clip(poly: &[P2], n: P2, b: f64) -> Vec<P2> {
    let f = |p: P2| n[0] * p[0] + n[1] * p[1] - b;
    let k = poly.len();
    let mut out = Vec::new();
    for i in 0..k {
        let (p, q) = (poly[i], poly[(i + 1) % k]);
        let (fp, fq) = (f(p), f(q));
        if fp <= 0.0 {
            out.push(p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            let t = fp / (fp - fq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

fn seg_dist(p: P2, a: P2, b: P2) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    };
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// Euclidean distance from `p` to a counterclockwise convex polygon (any
/// vertex count, including a point or a segment).
pub fn euclid_dist_to_polygon(p: P2, poly: &[P2]) -> f64 {
    let k = poly.len();
    if k >= 3 && (0..k).all(|i| orient(poly[i], poly[(i + 1) % k], p) >= 0.0) {
        return 0.0;
    }
    (0..k)
        .map(|i| seg_dist(p, poly[i], poly[(i + 1) % k]))
        .fold(f64::INFINITY, f64::min)
}

/// Euclidean Hausdorff distance of two convex polygons. For convex sets
/// the supremum is attained at a vertex.
pub fn euclid_hausdorff(a: &[P2], b: &[P2]) -> f64 {
    let ab = a.iter().map(|&p| euclid_dist_to_polygon(p, b)).fold(0.0, f64::max);
    let ba = b.iter().map(|&p| euclid_dist_to_polygon(p, a)).fold(0.0, f64::max);
    ab.max(ba)
}

/// Whether the ℓ∞ ball of radius `r` around `x` meets the convex polygon,
/// by separating axes (box axes and polygon edge normals).
pub fn square_meets_polygon(x: P2, r: f64, poly: &[P2]) -> bool {
    let k = poly.len();
    for axis in 0..2 {
        let lo = poly.iter().map(|p| p[axis]).fold(f64::INFINITY, f64::min);
        let hi = poly.iter().map(|p| p[axis]).fold(f64::NEG_INFINITY, f64::max);
        if hi < x[axis] - r || lo > x[axis] + r {
            return false;
        }
    }
    if k >= 3 {
        for i in 0..k {
            let (a, b) = (poly[i], poly[(i + 1) % k]);
            // Outward normal of a counterclockwise edge.
            let n = [b[1] - a[1], a[0] - b[0]];
            let off = n[0] * a[0] + n[1] * a[1];
            if n[0] * x[0] + n[1] * x[1] - r * (n[0].abs() + n[1].abs()) > off {
                return false;
            }
        }
    } else if k == 2 {
        let (a, b) = (poly[0], poly[1]);
        let n = [b[1] - a[1], a[0] - b[0]];
        let off = n[0] * a[0] + n[1] * a[1];
        let c = n[0] * x[0] + n[1] * x[1];
        let w = r * (n[0].abs() + n[1].abs());
        if c - w > off || c + w < off {
            return false;
        }
    }
    true
}

/// ℓ∞ distance from `x` to the segment `[a, b]`.
///
/// `t ↦ ‖x − a − t(b − a)‖∞` is convex and piecewise linear, so its minimum
/// over `[0, 1]` sits at an end or where the two coordinate terms have
/// equal magnitude.
pub fn linf_dist_to_segment(x: P2, a: P2, b: P2) -> f64 {
    let r = [x[0] - a[0], x[1] - a[1]];
    let d = [b[0] - a[0], b[1] - a[1]];
    let f = |t: f64| (r[0] - t * d[0]).abs().max((r[1] - t * d[1]).abs());
    let mut best = f(0.0).min(f(1.0));
    for (num, den) in [(r[0] - r[1], d[0] - d[1]), (r[0] + r[1], d[0] + d[1])] {
        if den != 0.0 {
            best = best.min(f((num / den).clamp(0.0, 1.0)));
        }
    }
    best
}

/// ℓ∞ distance from `x` to a counterclockwise convex polygon; zero inside.
pub fn linf_dist_to_polygon(x: P2, poly: &[P2]) -> f64 {
    if poly.len() >= 3 && polygon_contains(poly, x, 0.0) {
        return 0.0;
    }
    let k = poly.len();
    if k == 1 {
        return (x[0] - poly[0][0]).abs().max((x[1] - poly[0][1]).abs());
    }
    (0..k)
        .map(|i| linf_dist_to_segment(x, poly[i], poly[(i + 1) % k]))
        .fold(f64::INFINITY, f64::min)
}

/// ℓ∞ Hausdorff distance of two convex polygons.
pub fn linf_hausdorff(a: &[P2], b: &[P2]) -> f64 {
    let ab = a.iter().map(|&p| linf_dist_to_polygon(p, b)).fold(0.0, f64::max);
    let ba = b.iter().map(|&p| linf_dist_to_polygon(p, a)).fold(0.0, f64::max);
    ab.max(ba)
}

/// Whether `x` lies in the closed counterclockwise convex polygon, with a
/// signed-distance slack.
pub fn polygon_contains(poly: &[P2], x: P2, slack: f64) -> bool {
    let k = poly.len();
    if k < 3 {
        return euclid_dist_to_polygon(x, poly) <= slack;
    }
    (0..k).all(|i| {
        let (a, b) = (poly[i], poly[(i + 1) % k]);
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        orient(a, b, x) / len >= -slack
    })
}

pub fn linf_extent(poly: &[P2]) -> f64 {
    let span = |i: usize| {
        let lo = poly.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min);
        let hi = poly.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    span(0).max(span(1))
}

pub type M2 = [[f64; 2]; 2];

pub fn field(a: &M2, u: P2, x: P2) -> P2 {
    [
        a[0][0] * x[0] + a[0][1] * x[1] + u[0],
        a[1][0] * x[0] + a[1][1] * x[1] + u[1],
    ]
}

/// Classic RK4 on `ẋ = Ax + u` with Kahan-compensated state updates, so
/// that round-off stays well below the truncation-free accuracy targets
/// even over a million steps.
pub fn rk4_flow(a: &M2, u: P2, x0: P2, t: f64, step: f64) -> P2 {
    let n = (t / step).ceil().max(1.0) as u64;
    let h = t / n as f64;
    let mut x = x0;
    let mut comp = [0.0; 2];
    for _ in 0..n {
        let k1 = field(a, u, x);
        let k2 = field(a, u, [x[0] + 0.5 * h * k1[0], x[1] + 0.5 * h * k1[1]]);
        let k3 = field(a, u, [x[0] + 0.5 * h * k2[0], x[1] + 0.5 * h * k2[1]]);
        let k4 = field(a, u, [x[0] + h * k3[0], x[1] + h * k3[1]]);
        for i in 0..2 {
            let dx = h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            let y = dx - comp[i];
            let s = x[i] + y;
            comp[i] = (s - x[i]) - y;
            x[i] = s;
        }
    }
    x
}

/// Composite Simpson rule of a matrix-valued function on `[0, t]`.
pub fn simpson(f: impl Fn(f64) -> M2, t: f64, step: f64) -> M2 {
    let mut n = (t / step).ceil() as u64;
    if n % 2 == 1 {
        n += 1;
    }
    let h = t / n as f64;
    let mut acc = [[0.0; 2]; 2];
    for k in 0..=n {
        let w = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let v = f(k as f64 * h);
        for i in 0..2 {
            for j in 0..2 {
                acc[i][j] += w * v[i][j];
            }
        }
    }
    for row in &mut acc {
        for v in row {
            *v *= h / 3.0;
        }
    }
    acc
}

/// `e^{At}` by Taylor series after scaling so that `‖At‖ ≤ 1/8`, then
/// repeated squaring.
pub fn taylor_expm(a: &M2, t: f64) -> M2 {
    let norm = a
        .iter()
        .map(|r| r[0].abs() + r[1].abs())
        .fold(0.0, f64::max)
        * t.abs();
    let mut s = 0;
    while norm / f64::powi(2.0, s) > 0.125 {
        s += 1;
    }
    let c = t / f64::powi(2.0, s);
    let b = [[a[0][0] * c, a[0][1] * c], [a[1][0] * c, a[1][1] * c]];
    let mut term = [[1.0, 0.0], [0.0, 1.0]];
    let mut sum = term;
    for k in 1..30 {
        term = matmul(&term, &b);
        for row in &mut term {
            for v in row {
                *v /= k as f64;
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..s {
        sum = matmul(&sum, &sum);
    }
    sum
}

pub fn matmul(a: &M2, b: &M2) -> M2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn random_matrix(rng: &mut impl Rng, scale: f64) -> M2 {
    [
        [rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)],
        [rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)],
    ]
}

pub fn random_point(rng: &mut impl Rng, scale: f64) -> P2 {
    [rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)]
}

/// Counterclockwise convex polygon: the hull of random points, computed by
/// gift wrapping so the crate's hull is not involved.
pub fn random_convex_polygon(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<P2> {
    loop {
        let pts: Vec<P2> = (0..n).map(|_| random_point(rng, scale)).collect();
        let hull = gift_wrap(&pts);
        if hull.len() >= 3 {
            return hull;
        }
    }
}

/// Jarvis march, counterclockwise, strictly convex output.
pub fn gift_wrap(pts: &[P2]) -> Vec<P2> {
    let start = *pts
        .iter()
        .min_by(|a, b| a.partial_cmp(b).unwrap())
        .expect("non-empty");
    let mut hull = vec![start];
    let mut cur = start;
    loop {
        let mut next = if pts[0] == cur { pts[1] } else { pts[0] };
        for &p in pts {
            if p == cur {
                continue;
            }
            let o = orient(cur, next, p);
            let farther = o == 0.0
                && (p[0] - cur[0]).abs() + (p[1] - cur[1]).abs()
                    > (next[0] - cur[0]).abs() + (next[1] - cur[1]).abs();
            if o < 0.0 || farther {
                next = p;
            }
        }
        if next == start {
            return hull;
        }
        hull.push(next);
        cur = next;
        if hull.len() > pts.len() {
            return hull;
        }
    }
}
