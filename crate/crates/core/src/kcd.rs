//! Kinematic collision detection: forward kinematics plus GJK against every
//! workspace obstacle. This is the ground truth the proxy model learns from.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use crate::dataset::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::geometry::{gjk_intersects, Aabb, ArmModel, ConvexPolygon, Vec2};

/// Collision status of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    /// `+1`
    Collision,
    /// `-1`
    Free,
}

impl Label {
    #[inline]
    pub fn value(self) -> i8 {
        match self {
            Label::Collision => 1,
            Label::Free => -1,
        }
    }

    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Label::Collision => 1.0,
            Label::Free => -1.0,
        }
    }

    pub fn from_value(v: i8) -> Result<Self> {
        match v {
            1 => Ok(Label::Collision),
            -1 => Ok(Label::Free),
            other => Err(Error::InvalidArgument(format!(
                "label must be +1 or -1, got {other}"
            ))),
        }
    }

    /// `sgn` with ties going to collision.
    #[inline]
    pub fn from_score(score: f64) -> Self {
        if score >= 0.0 {
            Label::Collision
        } else {
            Label::Free
        }
    }

    pub fn is_collision(self) -> bool {
        self == Label::Collision
    }
}

/// Anything that can label a configuration. Callers are responsible for
/// passing configurations of the right dimension.
pub trait CollisionChecker {
    fn label(&self, q: &[f64]) -> Label;

    fn dof(&self) -> usize;
}

/// Obstacles within an axis-aligned workspace boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Workspace {
    obstacles: Vec<ConvexPolygon>,
    bounds: Aabb,
}

impl Workspace {
    /// Obstacles are clipped to `bounds`; any that end up outside are dropped.
    pub fn new(bounds: Aabb, obstacles: Vec<ConvexPolygon>) -> Self {
        let obstacles = obstacles
            .into_iter()
            .filter_map(|o| o.clip_to_aabb(&bounds))
            .collect();
        Self { obstacles, bounds }
    }

    pub fn empty(bounds: Aabb) -> Self {
        Self {
            obstacles: Vec::new(),
            bounds,
        }
    }

    pub fn obstacles(&self) -> &[ConvexPolygon] {
        &self.obstacles
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn add_obstacle(&mut self, obstacle: ConvexPolygon) {
        if let Some(o) = obstacle.clip_to_aabb(&self.bounds) {
            self.obstacles.push(o);
        }
    }
}

#[inline]
fn check_unchecked(arm: &ArmModel, q: &[f64], w: &Workspace) -> Label {
    for link in arm.links(q) {
        for obstacle in &w.obstacles {
            if gjk_intersects(&link, obstacle) {
                return Label::Collision;
            }
        }
    }
    Label::Free
}

/// Labels `q` by testing every link against every obstacle.
pub fn kcd_check(arm: &ArmModel, q: &[f64], w: &Workspace) -> Result<Label> {
    check_dim(arm.dof(), q.len())?;
    Ok(check_unchecked(arm, q, w))
}

/// Query counter and accumulated check time. Safe to update from many threads.
#[derive(Debug, Default)]
pub struct KcdStats {
    queries: AtomicU64,
    nanos: AtomicU64,
}

impl KcdStats {
    pub fn query_count(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    pub fn total_time(&self) -> Duration {
        Duration::from_nanos(self.nanos.load(Ordering::Relaxed))
    }

    pub fn reset(&self) {
        self.queries.store(0, Ordering::Relaxed);
        self.nanos.store(0, Ordering::Relaxed);
    }

    fn record(&self, elapsed: Duration) {
        self.queries.fetch_add(1, Ordering::Relaxed);
        self.nanos.fetch_add(elapsed.as_nanos() as u64, Ordering::Relaxed);
    }
}

/// An arm in a workspace snapshot, with instrumentation.
#[derive(Debug)]
pub struct KinematicChecker {
    arm: ArmModel,
    workspace: Workspace,
    stats: KcdStats,
}

impl KinematicChecker {
    pub fn new(arm: ArmModel, workspace: Workspace) -> Self {
        Self {
            arm,
            workspace,
            stats: KcdStats::default(),
        }
    }

    /// Checker for straight joint-space segments sampled at most `step`
    /// apart, endpoints included. Every point of the segment lies within
    /// `step / 2` of a sample, so padding the arm by what that motion can
    /// sweep makes free samples certify the whole segment for the original
    /// arm. Statistics start fresh.
    pub fn for_edges(&self, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "edge step {step} must be positive"
            )));
        }
        let margin = 0.5 * step * self.arm.motion_bound();
        // Slack for rounding in the kinematics.
        let margin = margin * (1.0 + 1e-9) + 1e-12;
        Ok(Self::new(self.arm.padded(margin)?, self.workspace.clone()))
    }

    pub fn arm(&self) -> &ArmModel {
        &self.arm
    }

    pub fn workspace(&self) -> &Workspace {
        &self.workspace
    }

    /// Swap in a new obstacle snapshot. Statistics are kept.
    pub fn set_workspace(&mut self, workspace: Workspace) {
        self.workspace = workspace;
    }

    pub fn stats(&self) -> &KcdStats {
        &self.stats
    }

    /// Instrumented check.
    pub fn check(&self, q: &[f64]) -> Result<Label> {
        check_dim(self.arm.dof(), q.len())?;
        let t0 = Instant::now();
        let label = check_unchecked(&self.arm, q, &self.workspace);
        self.stats.record(t0.elapsed());
        Ok(label)
    }

    /// Uninstrumented check, for timing loops that measure externally.
    #[inline]
    pub fn check_raw(&self, q: &[f64]) -> Label {
        debug_assert_eq!(q.len(), self.arm.dof());
        check_unchecked(&self.arm, q, &self.workspace)
    }

    /// Full sweep: relabels every dataset point.
    pub fn label_all(&self, dataset: &mut Dataset) -> Result<usize> {
        let all: Vec<usize> = (0..dataset.len()).collect();
        relabel(self, dataset, &all)
    }
}

impl CollisionChecker for KinematicChecker {
    fn label(&self, q: &[f64]) -> Label {
        self.check_raw(q)
    }

    fn dof(&self) -> usize {
        self.arm.dof()
    }
}

/// Replaces the labels at `indices` with fresh checks and returns how many
/// flipped. Indices are validated before anything is modified.
pub fn relabel(checker: &KinematicChecker, dataset: &mut Dataset, indices: &[usize]) -> Result<usize> {
    check_dim(checker.arm.dof(), dataset.dof())?;
    let n = dataset.len();
    if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: bad, len: n });
    }
    let mut flips = 0;
    for &i in indices {
        let label = checker.check(dataset.point(i))?;
        if dataset.label(i) != label {
            flips += 1;
        }
        dataset.set_label(i, label);
    }
    Ok(flips)
}

/// Offset that moves `obstacle`'s centroid to `target`.
pub fn offset_to(obstacle: &ConvexPolygon, target: Vec2) -> Vec2 {
    target - obstacle.centroid()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{build_dataset, JointBounds, SamplerKind, SamplerSpec};
    use crate::geometry::{random_convex_polygon, sat_intersects_points};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn arm() -> ArmModel {
        ArmModel::new(vec![1.0, 1.0], 0.1, Vec2::ZERO).unwrap()
    }

    fn bounds() -> Aabb {
        Aabb::centered(Vec2::ZERO, 3.0, 3.0)
    }

    fn grid(n: usize) -> Dataset {
        build_dataset(
            &SamplerSpec {
                kind: SamplerKind::Grid,
                n,
                dof: 2,
                seed: 0,
            },
            &JointBounds::symmetric(2),
            10.0,
        )
        .unwrap()
    }

    fn segment(a: &[f64], b: &[f64], step: f64) -> Vec<Vec<f64>> {
        let dist = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let n = (dist / step).ceil().max(1.0) as usize;
        (0..=n)
            .map(|k| {
                let t = k as f64 / n as f64;
                a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
            })
            .collect()
    }

    #[test]
    fn edge_checker_certifies_segments() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut certified = 0;
        for _ in 0..60 {
            let obstacles = (0..3)
                .map(|_| {
                    let c = Vec2::new(rng.random_range(-1.8..1.8), rng.random_range(-1.8..1.8));
                    random_convex_polygon(&mut rng, c, (0.1, 0.3), (3, 8)).unwrap()
                })
                .collect();
            let exact = KinematicChecker::new(arm(), Workspace::new(bounds(), obstacles));
            let step = 0.05;
            let edges = exact.for_edges(step).unwrap();
            for _ in 0..50 {
                let a: Vec<f64> = (0..2).map(|_| rng.random_range(-3.0..3.0)).collect();
                let b: Vec<f64> = a.iter().map(|x| x + rng.random_range(-0.6..0.6)).collect();
                if segment(&a, &b, step)
                    .iter()
                    .all(|q| !edges.check_raw(q).is_collision())
                {
                    certified += 1;
                    assert!(segment(&a, &b, step / 200.0)
                        .iter()
                        .all(|q| !exact.check_raw(q).is_collision()));
                }
            }
        }
        assert!(certified > 100, "only {certified} segments certified");
    }

    #[test]
    fn empty_workspace_is_free() {
        let w = Workspace::empty(bounds());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let q = [rng.random_range(-3.1..3.1), rng.random_range(-3.1..3.1)];
            assert_eq!(kcd_check(&arm(), &q, &w).unwrap(), Label::Free);
        }
    }

    #[test]
    fn obstacle_on_base_always_collides() {
        let obstacle = ConvexPolygon::regular(Vec2::ZERO, 0.2, 6, 0.0).unwrap();
        let w = Workspace::new(bounds(), vec![obstacle]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let q = [rng.random_range(-3.1..3.1), rng.random_range(-3.1..3.1)];
            assert_eq!(kcd_check(&arm(), &q, &w).unwrap(), Label::Collision);
        }
    }

    #[test]
    fn matches_sat_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let arm = arm();
        for _ in 0..300 {
            let obstacles: Vec<_> = (0..3)
                .map(|_| {
                    let c = Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                    random_convex_polygon(&mut rng, c, (0.1, 0.4), (3, 8)).unwrap()
                })
                .collect();
            let w = Workspace::new(bounds(), obstacles);
            let q = [rng.random_range(-3.1..3.1), rng.random_range(-3.1..3.1)];
            let links = crate::geometry::forward_kinematics(&arm, &q).unwrap();
            let expected = links.iter().any(|l| {
                w.obstacles()
                    .iter()
                    .any(|o| sat_intersects_points(&l.vertices(), o.vertices()))
            });
            assert_eq!(kcd_check(&arm, &q, &w).unwrap().is_collision(), expected);
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let w = Workspace::empty(bounds());
        assert!(kcd_check(&arm(), &[0.0, 0.0, 0.0], &w).is_err());
    }

    #[test]
    fn relabel_nothing() {
        let checker = KinematicChecker::new(arm(), Workspace::empty(bounds()));
        let mut d = grid(25);
        let before = d.labels().to_vec();
        assert_eq!(relabel(&checker, &mut d, &[]).unwrap(), 0);
        assert_eq!(d.labels(), &before[..]);
        assert_eq!(checker.stats().query_count(), 0);
    }

    #[test]
    fn relabel_rejects_bad_index_without_mutation() {
        let obstacle = ConvexPolygon::regular(Vec2::ZERO, 0.2, 6, 0.0).unwrap();
        let checker = KinematicChecker::new(arm(), Workspace::new(bounds(), vec![obstacle]));
        let mut d = grid(25);
        let err = relabel(&checker, &mut d, &[0, 1, 25]).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { index: 25, len: 25 }));
        assert!(d.labels().iter().all(|&l| l == Label::Free));
    }

    #[test]
    fn static_relabel_is_idempotent() {
        let obstacle = ConvexPolygon::regular(Vec2::new(1.2, 0.3), 0.4, 5, 0.2).unwrap();
        let checker = KinematicChecker::new(arm(), Workspace::new(bounds(), vec![obstacle]));
        let mut d = grid(400);
        let first = checker.label_all(&mut d).unwrap();
        assert!(first > 0);
        assert_eq!(checker.label_all(&mut d).unwrap(), 0);
        assert_eq!(checker.stats().query_count(), 800);
    }

    #[test]
    fn moving_obstacle_flips_exactly_the_changed_points() {
        let obstacle = ConvexPolygon::regular(Vec2::new(1.2, 0.3), 0.4, 5, 0.2).unwrap();
        let moved = obstacle.translated(Vec2::new(-0.5, 0.6));
        let mut checker = KinematicChecker::new(arm(), Workspace::new(bounds(), vec![obstacle]));
        let mut d = grid(400);
        checker.label_all(&mut d).unwrap();
        let before = d.labels().to_vec();
        let new_w = Workspace::new(bounds(), vec![moved]);
        let oracle: Vec<Label> = (0..d.len())
            .map(|i| kcd_check(&arm(), d.point(i), &new_w).unwrap())
            .collect();
        checker.set_workspace(new_w);
        let flips = checker.label_all(&mut d).unwrap();
        let expected = before.iter().zip(&oracle).filter(|(a, b)| a != b).count();
        assert!(expected > 0);
        assert_eq!(flips, expected);
        assert_eq!(d.labels(), &oracle[..]);
    }

    #[test]
    fn adding_obstacles_never_frees() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut w = Workspace::empty(bounds());
        let qs: Vec<[f64; 2]> = (0..300)
            .map(|_| [rng.random_range(-3.1..3.1), rng.random_range(-3.1..3.1)])
            .collect();
        let mut prev: Vec<Label> = qs.iter().map(|q| kcd_check(&arm(), q, &w).unwrap()).collect();
        for _ in 0..5 {
            let c = Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            w.add_obstacle(random_convex_polygon(&mut rng, c, (0.1, 0.4), (3, 8)).unwrap());
            let cur: Vec<Label> = qs.iter().map(|q| kcd_check(&arm(), q, &w).unwrap()).collect();
            for (p, c) in prev.iter().zip(&cur) {
                assert!(!(p.is_collision() && !c.is_collision()));
            }
            prev = cur;
        }
    }

    #[test]
    fn workspace_clips_obstacles() {
        let half_out = ConvexPolygon::regular(Vec2::new(3.0, 0.0), 0.5, 8, 0.0).unwrap();
        let outside = ConvexPolygon::regular(Vec2::new(10.0, 0.0), 0.5, 8, 0.0).unwrap();
        let w = Workspace::new(bounds(), vec![half_out, outside]);
        assert_eq!(w.obstacles().len(), 1);
        assert!(bounds().contains_aabb(&w.obstacles()[0].aabb()));
    }
}
