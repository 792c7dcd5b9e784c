mod common;

use common::{checker_with, random_polygon, two_link};
use fastron::dataset::JointBounds;
use fastron::geometry::{
    forward_kinematics, gjk_intersects, sat_intersects, sat_intersects_points, Aabb, ArmModel, ConvexPolygon,
    Vec2,
};
use fastron::kcd::{kcd_check, Label, Workspace};
use fastron::planner::edge_free;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn gjk_agrees_with_sat(seed in any::<u64>(), spread in 0.2f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_polygon(&mut rng, spread);
        let b = random_polygon(&mut rng, spread);
        prop_assert_eq!(gjk_intersects(&a, &b), sat_intersects(&a, &b));
    }

    #[test]
    fn intersection_is_symmetric_and_translation_invariant(
        seed in any::<u64>(),
        dx in -50.0f64..50.0,
        dy in -50.0f64..50.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_polygon(&mut rng, 1.0);
        let b = random_polygon(&mut rng, 1.0);
        let hit = gjk_intersects(&a, &b);
        prop_assert_eq!(hit, gjk_intersects(&b, &a));
        let off = Vec2::new(dx, dy);
        let (ta, tb) = (a.translated(off), b.translated(off));
        // Translation rounds the coordinates, so only check pairs that are
        // not within rounding of touching.
        prop_assume!(sat_intersects(&ta, &tb) == hit);
        prop_assert_eq!(gjk_intersects(&ta, &tb), hit);
    }

    #[test]
    fn links_against_polygons_agree_with_sat(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let arm = two_link();
        let q = JointBounds::symmetric(2).sample(&mut rng);
        let obstacle = random_polygon(&mut rng, 2.0);
        for link in forward_kinematics(&arm, &q).unwrap() {
            prop_assert_eq!(
                gjk_intersects(&link, &obstacle),
                sat_intersects_points(&link.vertices(), obstacle.vertices())
            );
        }
    }

    #[test]
    fn tip_matches_closed_form(lengths in prop::collection::vec(0.1f64..2.0, 1..6), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dof = lengths.len();
        let base = Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let arm = ArmModel::new(lengths.clone(), 0.05, base).unwrap();
        let q = JointBounds::symmetric(dof).sample(&mut rng);
        let links = forward_kinematics(&arm, &q).unwrap();
        let (mut x, mut y, mut theta) = (base.x, base.y, 0.0);
        for (i, (&l, &qi)) in lengths.iter().zip(&q).enumerate() {
            theta += qi;
            x += l * theta.cos();
            y += l * theta.sin();
            prop_assert!((links[i].end - Vec2::new(x, y)).norm() < 1e-12);
        }
        for w in links.windows(2) {
            prop_assert_eq!(w[0].end, w[1].start);
        }
    }
}

#[test]
fn empty_workspace_is_free_everywhere() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let arm = two_link();
    let w = Workspace::empty(Aabb::centered(Vec2::ZERO, 2.5, 2.5));
    for _ in 0..500 {
        let q = JointBounds::symmetric(2).sample(&mut rng);
        assert_eq!(kcd_check(&arm, &q, &w).unwrap(), Label::Free);
    }
}

#[test]
fn obstacle_over_the_base_collides_everywhere() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let blob = ConvexPolygon::regular(Vec2::ZERO, 0.3, 8, 0.0).unwrap();
    let checker = checker_with(vec![blob]);
    for _ in 0..500 {
        let q = JointBounds::symmetric(2).sample(&mut rng);
        assert_eq!(checker.check(&q).unwrap(), Label::Collision);
    }
}

#[test]
fn edge_checks_agree_with_a_finer_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let bounds = JointBounds::symmetric(2);
    let (mut agree, mut total) = (0, 0);
    for _ in 0..40 {
        let obstacles = (0..3).map(|_| random_polygon(&mut rng, 2.0)).collect();
        let checker = checker_with(obstacles);
        for _ in 0..50 {
            let a = bounds.sample(&mut rng);
            let b: Vec<f64> = a.iter().map(|x| x + rng.random_range(-0.2..0.2)).collect();
            total += 1;
            if edge_free(&checker, &a, &b, 0.01) == edge_free(&checker, &a, &b, 0.001) {
                agree += 1;
            }
        }
    }
    assert!(agree as f64 >= 0.99 * total as f64, "{agree} of {total}");
}
