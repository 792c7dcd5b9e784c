use rand::Rng;

use super::{Aabb, Support, Vec2};
use crate::error::{Error, Result};

/// Consecutive vertices closer than this are treated as duplicates.
pub const DUPLICATE_TOLERANCE: f64 = 1e-9;

/// A strictly convex polygon with counter-clockwise winding.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
}

impl ConvexPolygon {
    /// Validates the vertex loop and normalizes it to counter-clockwise order.
    pub fn new(mut vertices: Vec<Vec2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidPolygon(format!(
                "need at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPolygon("non-finite vertex".into()));
        }
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            if (b - a).norm() <= DUPLICATE_TOLERANCE {
                return Err(Error::InvalidPolygon(format!(
                    "duplicate consecutive vertices at index {i}"
                )));
            }
        }
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if (b - a).cross(c - b) <= 0.0 {
                return Err(Error::InvalidPolygon(format!(
                    "not strictly convex at vertex {}",
                    (i + 1) % n
                )));
            }
        }
        Ok(Self { vertices })
    }

    /// Axis-aligned rectangle as a polygon.
    pub fn rectangle(bounds: Aabb) -> Result<Self> {
        Self::new(vec![
            bounds.min,
            Vec2::new(bounds.max.x, bounds.min.y),
            bounds.max,
            Vec2::new(bounds.min.x, bounds.max.y),
        ])
    }

    /// Regular polygon inscribed in a circle, first vertex at `phase` radians.
    pub fn regular(center: Vec2, radius: f64, sides: usize, phase: f64) -> Result<Self> {
        let step = std::f64::consts::TAU / sides as f64;
        Self::new(
            (0..sides)
                .map(|k| center + Vec2::from_angle(phase + k as f64 * step) * radius)
                .collect(),
        )
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    /// Area-weighted centroid.
    pub fn centroid(&self) -> Vec2 {
        let n = self.vertices.len();
        let mut acc = Vec2::ZERO;
        let mut twice_area = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let w = a.cross(b);
            twice_area += w;
            acc += (a + b) * w;
        }
        acc * (1.0 / (3.0 * twice_area))
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(&self.vertices).expect("polygon has vertices")
    }

    pub fn translated(&self, offset: Vec2) -> ConvexPolygon {
        ConvexPolygon {
            vertices: self.vertices.iter().map(|&v| v + offset).collect(),
        }
    }

    /// Point-in-polygon, boundary inclusive.
    pub fn contains(&self, p: Vec2) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            (b - a).cross(p - a) >= 0.0
        })
    }

    /// Sutherland-Hodgman clip against an axis-aligned box. Returns `None` when
    /// nothing with positive area remains.
    pub fn clip_to_aabb(&self, bounds: &Aabb) -> Option<ConvexPolygon> {
        if bounds.contains_aabb(&self.aabb()) {
            return Some(self.clone());
        }
        // Each half-plane is (normal, offset) with inside = normal . p <= offset.
        let planes = [
            (Vec2::new(-1.0, 0.0), -bounds.min.x),
            (Vec2::new(1.0, 0.0), bounds.max.x),
            (Vec2::new(0.0, -1.0), -bounds.min.y),
            (Vec2::new(0.0, 1.0), bounds.max.y),
        ];
        let mut poly = self.vertices.clone();
        for (normal, offset) in planes {
            if poly.is_empty() {
                return None;
            }
            let mut out = Vec::with_capacity(poly.len() + 1);
            for i in 0..poly.len() {
                let cur = poly[i];
                let next = poly[(i + 1) % poly.len()];
                let dc = normal.dot(cur) - offset;
                let dn = normal.dot(next) - offset;
                if dc <= 0.0 {
                    out.push(cur);
                }
                if (dc < 0.0 && dn > 0.0) || (dc > 0.0 && dn < 0.0) {
                    let t = dc / (dc - dn);
                    out.push(cur + (next - cur) * t);
                }
            }
            poly = out;
        }
        ConvexPolygon::new(convex_hull(&poly)).ok()
    }
}

impl Support for ConvexPolygon {
    #[inline]
    fn support(&self, dir: Vec2) -> Vec2 {
        self.vertices.as_slice().support(dir)
    }

    fn reference_point(&self) -> Vec2 {
        self.vertices[0]
    }
}

fn signed_area(vertices: &[Vec2]) -> f64 {
    let n = vertices.len();
    0.5 * (0..n)
        .map(|i| vertices[i].cross(vertices[(i + 1) % n]))
        .sum::<f64>()
}

/// Andrew's monotone chain. Collinear and duplicate points are dropped; the
/// result is counter-clockwise.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| (*a - *b).norm() <= DUPLICATE_TOLERANCE);
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * pts.len());
    half_hull(&mut hull, pts.iter().copied());
    half_hull(&mut hull, pts.iter().rev().copied());
    hull
}

fn half_hull(hull: &mut Vec<Vec2>, points: impl Iterator<Item = Vec2>) {
    let start = hull.len();
    for p in points {
        while hull.len() >= start + 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            if (b - a).cross(p - b) <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    // Last point is the first point of the other half.
    hull.pop();
}

/// Random convex polygon: sorted random angles on a star of random radii,
/// then the convex hull of those points.
pub fn random_convex_polygon<R: Rng + ?Sized>(
    rng: &mut R,
    center: Vec2,
    radius_range: (f64, f64),
    vertex_count_range: (usize, usize),
) -> Result<ConvexPolygon> {
    let (r_min, r_max) = radius_range;
    let (n_min, n_max) = vertex_count_range;
    if !(r_min > 0.0 && r_min <= r_max && r_max.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "radius range ({r_min}, {r_max}) must satisfy 0 < min <= max"
        )));
    }
    if !(n_min >= 3 && n_min <= n_max) {
        return Err(Error::InvalidArgument(format!(
            "vertex count range ({n_min}, {n_max}) must satisfy 3 <= min <= max"
        )));
    }
    loop {
        let n = rng.random_range(n_min..=n_max);
        let mut angles: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        angles.sort_by(f64::total_cmp);
        let star: Vec<Vec2> = angles
            .iter()
            .map(|&a| {
                let r = if r_min == r_max {
                    r_min
                } else {
                    rng.random_range(r_min..=r_max)
                };
                center + Vec2::from_angle(a) * r
            })
            .collect();
        if let Ok(poly) = ConvexPolygon::new(convex_hull(&star)) {
            return Ok(poly);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn square(c: Vec2, side: f64) -> ConvexPolygon {
        ConvexPolygon::rectangle(Aabb::centered(c, side / 2.0, side / 2.0)).unwrap()
    }

    #[test]
    fn clockwise_input_is_normalized() {
        let cw = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 0.0),
        ];
        let p = ConvexPolygon::new(cw).unwrap();
        assert!(p.area() > 0.0);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(ConvexPolygon::new(vec![Vec2::ZERO, Vec2::new(1.0, 0.0)]).is_err());
        let collinear = vec![
            Vec2::ZERO,
            Vec2::new(1.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(1.0, 1.0),
        ];
        assert!(ConvexPolygon::new(collinear).is_err());
        let dup = vec![
            Vec2::ZERO,
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
        ];
        assert!(ConvexPolygon::new(dup).is_err());
        let reflex = vec![
            Vec2::ZERO,
            Vec2::new(2.0, 0.0),
            Vec2::new(1.0, 0.5),
            Vec2::new(2.0, 2.0),
            Vec2::new(0.0, 2.0),
        ];
        assert!(ConvexPolygon::new(reflex).is_err());
    }

    #[test]
    fn centroid_of_square() {
        let p = square(Vec2::new(3.0, -1.0), 2.0);
        let c = p.centroid();
        assert!((c.x - 3.0).abs() < 1e-12 && (c.y + 1.0).abs() < 1e-12);
    }

    #[test]
    fn hull_drops_interior_and_collinear_points() {
        let pts = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(2.0, 2.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 2.0),
        ];
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 4);
        assert!(ConvexPolygon::new(hull).is_ok());
    }

    #[test]
    fn clip_keeps_inside_part() {
        let p = square(Vec2::new(1.0, 0.0), 2.0);
        let bounds = Aabb::new(Vec2::new(-5.0, -5.0), Vec2::new(1.0, 5.0));
        let clipped = p.clip_to_aabb(&bounds).unwrap();
        assert!((clipped.area() - 2.0).abs() < 1e-12);
        assert!(bounds.contains_aabb(&clipped.aabb()));
        let far = Aabb::new(Vec2::new(10.0, 10.0), Vec2::new(11.0, 11.0));
        assert!(p.clip_to_aabb(&far).is_none());
    }

    #[test]
    fn random_polygon_is_deterministic() {
        let a = random_convex_polygon(&mut ChaCha8Rng::seed_from_u64(42), Vec2::ZERO, (0.2, 0.5), (3, 8))
            .unwrap();
        let b = random_convex_polygon(&mut ChaCha8Rng::seed_from_u64(42), Vec2::ZERO, (0.2, 0.5), (3, 8))
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn triangle_when_vertex_range_is_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let p = random_convex_polygon(&mut rng, Vec2::ZERO, (0.1, 1.0), (3, 3)).unwrap();
            assert_eq!(p.len(), 3);
        }
    }

    #[test]
    fn random_polygon_invariants_over_many_seeds() {
        for seed in 0..10_000u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_convex_polygon(&mut rng, Vec2::new(1.0, 2.0), (0.05, 0.6), (3, 12)).unwrap();
            // Re-validating must succeed unchanged.
            let again = ConvexPolygon::new(p.vertices().to_vec()).unwrap();
            assert_eq!(again, p);
            assert!(p.len() >= 3 && p.len() <= 12);
            for v in p.vertices() {
                assert!((*v - Vec2::new(1.0, 2.0)).norm() <= 0.6 + 1e-12);
            }
        }
    }

    #[test]
    fn bad_ranges_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(random_convex_polygon(&mut rng, Vec2::ZERO, (0.0, 1.0), (3, 4)).is_err());
        assert!(random_convex_polygon(&mut rng, Vec2::ZERO, (1.0, 0.5), (3, 4)).is_err());
        assert!(random_convex_polygon(&mut rng, Vec2::ZERO, (0.1, 0.5), (2, 4)).is_err());
    }
}
