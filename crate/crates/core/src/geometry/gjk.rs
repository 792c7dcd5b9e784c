//! Boolean Gilbert-Johnson-Keerthi intersection test for convex shapes in the
//! plane.
//!
//! The test walks the Minkowski difference `A - B` toward the origin, keeping
//! a simplex of at most three support points and its closest point `v` to the
//! origin. It stops as soon as either a support plane strictly separates the
//! origin (disjoint) or the simplex encloses the origin (intersecting).
//! Touching contact counts as intersecting.

use super::{Support, Vec2};

/// Iteration cap. Exhausting it yields the conservative answer `true`.
pub const MAX_ITERATIONS: usize = 64;

/// Relative progress below which the search is considered stalled.
pub const PROGRESS_TOLERANCE: f64 = 1e-10;

/// Squared distance under which the origin is taken to lie on the simplex.
const ZERO_DISTANCE_SQUARED: f64 = 1e-24;

#[inline]
fn minkowski_support<A, B>(a: &A, b: &B, dir: Vec2) -> Vec2
where
    A: Support + ?Sized,
    B: Support + ?Sized,
{
    a.support(dir) - b.support(-dir)
}

/// Returns `true` iff the two convex shapes intersect or touch.
pub fn gjk_intersects<A, B>(a: &A, b: &B) -> bool
where
    A: Support + ?Sized,
    B: Support + ?Sized,
{
    let mut dir = a.reference_point() - b.reference_point();
    if dir.norm_squared() == 0.0 {
        dir = Vec2::new(1.0, 0.0);
    }
    let mut simplex = Simplex::default();
    simplex.push(minkowski_support(a, b, dir));
    let mut v = simplex.points[0];

    for _ in 0..MAX_ITERATIONS {
        let vv = v.norm_squared();
        if vv <= ZERO_DISTANCE_SQUARED {
            return true;
        }
        let w = minkowski_support(a, b, -v);
        if v.dot(w) > 0.0 {
            // The plane through w with normal v strictly separates the origin.
            return false;
        }
        if simplex.contains(w) {
            // No new support point; numerical stall at (near) contact.
            return true;
        }
        simplex.push(w);
        let (closest, enclosed) = simplex.reduce_toward_origin();
        if enclosed {
            return true;
        }
        let new_vv = closest.norm_squared();
        if new_vv >= vv * (1.0 - PROGRESS_TOLERANCE) {
            return true;
        }
        v = closest;
    }
    true
}

#[derive(Debug, Default, Clone, Copy)]
struct Simplex {
    points: [Vec2; 3],
    len: usize,
}

impl Simplex {
    fn push(&mut self, p: Vec2) {
        debug_assert!(self.len < 3);
        self.points[self.len] = p;
        self.len += 1;
    }

    fn contains(&self, p: Vec2) -> bool {
        self.points[..self.len].contains(&p)
    }

    /// Replaces the simplex with the smallest sub-simplex whose hull holds the
    /// point closest to the origin. Returns that point and whether the origin
    /// lies inside the (triangular) simplex.
    fn reduce_toward_origin(&mut self) -> (Vec2, bool) {
        match self.len {
            1 => (self.points[0], false),
            2 => {
                let (p, keep) = closest_on_segment(self.points[0], self.points[1]);
                self.keep(keep);
                (p, false)
            }
            3 => {
                let [a, b, c] = self.points;
                if triangle_contains_origin(a, b, c) {
                    return (Vec2::ZERO, true);
                }
                let candidates = [
                    (closest_on_segment(a, b), [0usize, 1]),
                    (closest_on_segment(b, c), [1, 2]),
                    (closest_on_segment(c, a), [2, 0]),
                ];
                let ((p, keep), idx) = candidates
                    .into_iter()
                    .min_by(|x, y| x.0 .0.norm_squared().total_cmp(&y.0 .0.norm_squared()))
                    .expect("three edges");
                let pts = [self.points[idx[0]], self.points[idx[1]]];
                self.points[0] = pts[0];
                self.points[1] = pts[1];
                self.len = 2;
                self.keep(keep);
                (p, false)
            }
            _ => unreachable!("simplex size {}", self.len),
        }
    }

    fn keep(&mut self, keep: Keep) {
        match keep {
            Keep::Both => {}
            Keep::First => self.len = 1,
            Keep::Second => {
                self.points[0] = self.points[1];
                self.len = 1;
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Keep {
    First,
    Second,
    Both,
}

fn closest_on_segment(a: Vec2, b: Vec2) -> (Vec2, Keep) {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (a, Keep::First);
    }
    let t = -a.dot(ab) / len2;
    if t <= 0.0 {
        (a, Keep::First)
    } else if t >= 1.0 {
        (b, Keep::Second)
    } else {
        (a + ab * t, Keep::Both)
    }
}

fn triangle_contains_origin(a: Vec2, b: Vec2, c: Vec2) -> bool {
    let d1 = a.cross(b);
    let d2 = b.cross(c);
    let d3 = c.cross(a);
    let has_neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    let has_pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    // A zero-area triangle is handled by the edge search instead.
    !(has_neg && has_pos) && (has_neg || has_pos)
}
