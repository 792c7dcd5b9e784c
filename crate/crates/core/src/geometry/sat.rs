//! Separating-axis test, used as an independent oracle for GJK.

use super::{ConvexPolygon, Vec2};

/// `true` iff no edge normal of either polygon separates them. Touching
/// projections count as overlap.
pub fn sat_intersects(a: &ConvexPolygon, b: &ConvexPolygon) -> bool {
    sat_intersects_points(a.vertices(), b.vertices())
}

/// SAT over convex vertex loops, also accepting degenerate loops: a single
/// point or a two-point segment. Segments contribute their direction as an
/// extra axis so that collinear segments are handled.
pub fn sat_intersects_points(a: &[Vec2], b: &[Vec2]) -> bool {
    assert!(!a.is_empty() && !b.is_empty(), "shapes need at least one vertex");
    axes(a).chain(axes(b)).all(|axis| overlaps_on(axis, a, b)) && (a.len() > 1 || b.len() > 1 || a[0] == b[0])
}

fn axes(points: &[Vec2]) -> impl Iterator<Item = Vec2> + '_ {
    let n = points.len();
    let normals = (0..if n > 1 { n } else { 0 }).map(move |i| (points[(i + 1) % n] - points[i]).perp());
    let segment_dir = (n == 2).then(|| points[1] - points[0]);
    normals
        .chain(segment_dir)
        .filter(|axis| axis.norm_squared() > 0.0)
}

fn project(axis: Vec2, points: &[Vec2]) -> (f64, f64) {
    points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            let d = axis.dot(*p);
            (lo.min(d), hi.max(d))
        })
}

fn overlaps_on(axis: Vec2, a: &[Vec2], b: &[Vec2]) -> bool {
    let (a_lo, a_hi) = project(axis, a);
    let (b_lo, b_hi) = project(axis, b);
    a_hi >= b_lo && b_hi >= a_lo
}
