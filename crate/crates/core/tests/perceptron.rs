mod common;

use common::{direct_hypothesis, random_dataset};
use fastron::dataset::Dataset;
use fastron::fastron::{FastronModel, Step};
use fastron::kcd::Label;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hypothesis_tracks_weights(seed in any::<u64>(), n in 2usize..60, dof in 1usize..4, ops in 1usize..80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut d = random_dataset(&mut rng, n, dof, 10.0);
        let mut model = FastronModel::for_dataset(&d, 1.0 + 9.0 * rng.random::<f64>(), 10_000).unwrap();
        for _ in 0..ops {
            match rng.random_range(0..4) {
                0 => { model.step(&d).unwrap(); }
                1 => { model.remove_redundant(&d).unwrap(); }
                2 => {
                    let i = rng.random_range(0..n);
                    let flipped = if d.label(i).is_collision() { Label::Free } else { Label::Collision };
                    d.set_label(i, flipped);
                }
                _ => { model.update(&d).unwrap(); }
            }
        }
        let direct = direct_hypothesis(&d, model.alpha());
        // Conflicting labels on close points drive the weights up, so the
        // rounding error scales with their size.
        let scale = 1.0 + model.alpha().iter().map(|a| a.abs()).sum::<f64>();
        prop_assert!(max_abs_diff(model.hypothesis(), &direct) <= 1e-12 * scale);
    }

    #[test]
    fn correction_lands_exactly_on_r(seed in any::<u64>(), n in 1usize..50, r_plus in 1.0f64..200.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_dataset(&mut rng, n, 2, 10.0);
        let mut model = FastronModel::for_dataset(&d, r_plus, 10_000).unwrap();
        for _ in 0..200 {
            match model.step(&d).unwrap() {
                Step::Converged { .. } => break,
                Step::Corrected { index, .. } => {
                    let r = if d.label(index).is_collision() { r_plus } else { 1.0 };
                    prop_assert!((model.margin(&d, index) - r).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn converged_models_fit_their_training_set(seed in any::<u64>(), n in 1usize..80, dof in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_dataset(&mut rng, n, dof, 10.0);
        let mut model = FastronModel::for_dataset(&d, 2.0, 100_000).unwrap();
        let report = model.update(&d).unwrap();
        prop_assume!(report.converged);
        for i in 0..n {
            prop_assert!(model.margin(&d, i) > 0.0);
            prop_assert_eq!(model.classify(&d, d.point(i)), d.label(i));
            prop_assert!((model.hypothesis_at(&d, d.point(i)) - model.hypothesis()[i]).abs() <= 1e-8);
        }
        let c = model.classifier(&d);
        for i in 0..n {
            prop_assert_eq!(c.classify(d.point(i)), d.label(i));
        }
    }

    #[test]
    fn removal_stops_at_the_exit_condition(seed in any::<u64>(), n in 1usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_dataset(&mut rng, n, 2, 10.0);
        let mut model = FastronModel::for_dataset(&d, 3.0, 100_000).unwrap();
        // Inflated weights make many points redundant.
        let alpha: Vec<f64> = (0..n).map(|i| d.label(i).sign() * rng.random_range(1.0..5.0)).collect();
        model.set_alpha(&d, alpha).unwrap();
        let before = model.support().to_vec();
        model.remove_redundant(&d).unwrap();
        for &s in model.support() {
            let leftover = d.label(s).sign() * (model.hypothesis()[s] - model.alpha()[s]);
            prop_assert!(leftover <= 0.0);
        }
        // Other points may lose their margin; see removal_can_flip_a_neighbor.
        let removed: Vec<usize> = before.iter().copied().filter(|s| !model.support().contains(s)).collect();
        prop_assert_eq!(model.support().len() + removed.len(), before.len());
        prop_assert!(max_abs_diff(model.hypothesis(), &direct_hypothesis(&d, model.alpha())) <= 1e-8);
    }

    #[test]
    fn truncated_classifier_agrees_with_full_sum(
        seed in any::<u64>(),
        n in 1usize..120,
        dof in 1usize..6,
        scale in -6i32..6,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_dataset(&mut rng, n, dof, 10.0);
        let mut model = FastronModel::for_dataset(&d, 2.0, 100_000).unwrap();
        let mag = 10f64.powi(scale);
        let alpha: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.5) { rng.random_range(-1.0..1.0) * mag } else { 0.0 })
            .collect();
        model.set_alpha(&d, alpha).unwrap();
        let c = model.classifier(&d);
        for _ in 0..200 {
            // Mix near and far queries.
            let spread = [0.5, 2.0, 8.0][rng.random_range(0..3)];
            let q: Vec<f64> = (0..dof).map(|_| rng.random_range(-spread..spread)).collect();
            let score = c.score(&q);
            prop_assert_eq!(c.classify(&q), Label::from_score(score));
            prop_assert_eq!(score, model.hypothesis_at(&d, &q));
        }
    }
}

/// Removing a redundant point can cost a neighbor its margin: b is held up
/// by both a and d, and losing either leaves it on the wrong side of c.
#[test]
fn removal_can_flip_a_neighbor() {
    let d = {
        let mut d = Dataset::from_points(1, vec![0.0, -0.5, -1.0, 0.05], 10.0).unwrap();
        for (i, l) in [Label::Collision, Label::Collision, Label::Free, Label::Collision]
            .into_iter()
            .enumerate()
        {
            d.set_label(i, l);
        }
        d
    };
    let mut model = FastronModel::for_dataset(&d, 2.0, 10).unwrap();
    model.set_alpha(&d, vec![1.0, 0.0, -1.2, 1.0]).unwrap();
    assert!(model.margin(&d, 1) > 0.0);
    assert_eq!(model.remove_redundant(&d).unwrap(), 1);
    assert_eq!(model.support(), &[0, 2]);
    assert!(model.margin(&d, 1) < 0.0);
    // The next update repairs it.
    assert!(model.update(&d).unwrap().converged);
    assert!((0..4).all(|i| model.margin(&d, i) > 0.0));
}

#[test]
fn exact_cancellation_counts_as_collision() {
    let d = Dataset::from_points(2, vec![0.3, 0.3, 0.3, 0.3], 10.0).unwrap();
    let mut model = FastronModel::for_dataset(&d, 2.0, 10).unwrap();
    model.set_alpha(&d, vec![1.5, -1.5]).unwrap();
    let c = model.classifier(&d);
    for q in [[0.3, 0.3], [0.5, -0.2], [40.0, 40.0]] {
        assert_eq!(c.score(&q), 0.0);
        assert_eq!(c.classify(&q), Label::Collision);
    }
}

#[test]
fn far_queries_underflow_to_collision() {
    let d = Dataset::from_points(1, vec![0.0], 10.0).unwrap();
    let mut model = FastronModel::for_dataset(&d, 2.0, 10).unwrap();
    model.set_alpha(&d, vec![-1.0]).unwrap();
    // exp(-10 * 100^2) underflows to zero.
    assert_eq!(model.hypothesis_at(&d, &[100.0]), 0.0);
    assert_eq!(model.classify(&d, &[100.0]), Label::Collision);
    assert_eq!(model.classifier(&d).classify(&[100.0]), Label::Collision);
    assert_eq!(model.classifier(&d).classify(&[0.5]), Label::Free);
}

#[test]
fn empty_support_is_collision_everywhere() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let d = random_dataset(&mut rng, 10, 3, 10.0);
    let model = FastronModel::for_dataset(&d, 2.0, 10).unwrap();
    let c = model.classifier(&d);
    for _ in 0..50 {
        let q: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
        assert_eq!(c.classify(&q), Label::Collision);
    }
}
