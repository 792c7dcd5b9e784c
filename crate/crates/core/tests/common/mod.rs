#![allow(dead_code)]

use fastron::dataset::Dataset;
use fastron::geometry::{random_convex_polygon, Aabb, ArmModel, ConvexPolygon, Vec2};
use fastron::kcd::{KinematicChecker, Label, Workspace};
use rand::Rng;

/// Random points in `[-1, 1]^dof` with random labels.
pub fn random_dataset<R: Rng>(rng: &mut R, n: usize, dof: usize, gamma: f64) -> Dataset {
    let pts: Vec<f64> = (0..n * dof).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut d = Dataset::from_points(dof, pts, gamma).unwrap();
    for i in 0..n {
        let label = if rng.random_bool(0.4) {
            Label::Collision
        } else {
            Label::Free
        };
        d.set_label(i, label);
    }
    d
}

/// `G alpha` recomputed from the points, independent of the cached Gram
/// matrix and of the model's incremental bookkeeping.
pub fn direct_hypothesis(d: &Dataset, alpha: &[f64]) -> Vec<f64> {
    (0..d.len())
        .map(|i| {
            (0..d.len())
                .filter(|&j| alpha[j] != 0.0)
                .map(|j| alpha[j] * fastron::dataset::kernel(d.point(i), d.point(j), d.gamma()).unwrap())
                .sum()
        })
        .collect()
}

pub fn random_polygon<R: Rng>(rng: &mut R, spread: f64) -> ConvexPolygon {
    let c = Vec2::new(
        rng.random_range(-spread..spread),
        rng.random_range(-spread..spread),
    );
    random_convex_polygon(rng, c, (0.05, 1.0), (3, 12)).unwrap()
}

pub fn two_link() -> ArmModel {
    ArmModel::new(vec![1.0, 1.0], 0.1, Vec2::ZERO).unwrap()
}

pub fn checker_with(obstacles: Vec<ConvexPolygon>) -> KinematicChecker {
    let bounds = Aabb::centered(Vec2::ZERO, 2.5, 2.5);
    KinematicChecker::new(two_link(), Workspace::new(bounds, obstacles))
}
