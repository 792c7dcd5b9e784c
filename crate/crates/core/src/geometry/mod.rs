//! Planar convex geometry: polygons, link rectangles, GJK with a SAT
//! cross-check, random obstacle generation and forward kinematics.
//!
//! Everything here is a pure function of immutable inputs.

mod gjk;
mod kinematics;
mod polygon;
mod sat;
mod vec2;

pub use gjk::{gjk_intersects, MAX_ITERATIONS as GJK_MAX_ITERATIONS};
pub use kinematics::{forward_kinematics, ArmModel, LinkShape, DEFAULT_THICKNESS_FRACTION};
pub use polygon::{convex_hull, random_convex_polygon, ConvexPolygon, DUPLICATE_TOLERANCE};
pub use sat::{sat_intersects, sat_intersects_points};
pub use vec2::{Aabb, Vec2};

/// Support mapping of a convex shape: the farthest point in a direction.
pub trait Support {
    fn support(&self, dir: Vec2) -> Vec2;

    /// Any point inside the shape; seeds the GJK search direction.
    fn reference_point(&self) -> Vec2;
}

impl Support for [Vec2] {
    #[inline]
    fn support(&self, dir: Vec2) -> Vec2 {
        let mut best = self[0];
        let mut best_dot = best.dot(dir);
        for &p in &self[1..] {
            let d = p.dot(dir);
            if d > best_dot {
                best = p;
                best_dot = d;
            }
        }
        best
    }

    fn reference_point(&self) -> Vec2 {
        self[0]
    }
}
