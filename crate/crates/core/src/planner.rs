//! Plain RRT in joint space over any [`CollisionChecker`].
//!
//! Only time spent inside the checker is reported, so planners backed by the
//! kinematic checker and by the learned proxy can be compared on their
//! collision-checking stage alone.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{squared_distance, Configuration, JointBounds};
use crate::error::{check_dim, Error, Result};
use crate::kcd::CollisionChecker;

#[derive(Debug, Clone, PartialEq)]
pub struct RrtParams {
    /// Maximum extension per iteration, radians.
    pub step_size: f64,
    /// Probability of sampling the goal instead of a uniform point.
    pub goal_bias: f64,
    pub max_iterations: usize,
    /// Maximum spacing of edge samples, radians.
    pub edge_resolution: f64,
    /// A node this close to the goal ends the search.
    pub goal_tolerance: f64,
    pub seed: u64,
}

impl Default for RrtParams {
    fn default() -> Self {
        Self {
            step_size: 0.2,
            goal_bias: 0.05,
            max_iterations: 10_000,
            edge_resolution: 0.01,
            goal_tolerance: 0.1,
            seed: 0,
        }
    }
}

impl RrtParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) {
            return Err(Error::InvalidArgument("step_size must be positive".into()));
        }
        if !(self.edge_resolution > 0.0 && self.edge_resolution <= self.step_size) {
            return Err(Error::InvalidArgument(
                "edge_resolution must be in (0, step_size]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.goal_bias) {
            return Err(Error::InvalidArgument("goal_bias must be in [0, 1]".into()));
        }
        if !(self.goal_tolerance >= 0.0) {
            return Err(Error::InvalidArgument(
                "goal_tolerance must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlanResult {
    /// Start to goal, or empty if no path was found.
    pub path: Vec<Configuration>,
    pub iterations: usize,
    pub checker_time: Duration,
    pub checker_queries: u64,
}

impl PlanResult {
    pub fn found(&self) -> bool {
        !self.path.is_empty()
    }
}

/// Checks `a`, `b` and evenly spaced points between them, no more than
/// `resolution` apart. Returns whether all are free and how many checks ran.
fn edge_free_counted<C: CollisionChecker + ?Sized>(
    checker: &C,
    a: &[f64],
    b: &[f64],
    resolution: f64,
    buf: &mut Vec<f64>,
) -> (bool, u64) {
    let dist = squared_distance(a, b).sqrt();
    let segments = (dist / resolution).ceil().max(0.0) as usize;
    if segments == 0 {
        return (!checker.label(a).is_collision(), 1);
    }
    buf.resize(a.len(), 0.0);
    for i in 0..=segments {
        let t = i as f64 / segments as f64;
        for ((q, &x), &y) in buf.iter_mut().zip(a).zip(b) {
            *q = x + (y - x) * t;
        }
        if checker.label(buf).is_collision() {
            return (false, i as u64 + 1);
        }
    }
    (true, segments as u64 + 1)
}

/// `true` iff every sample along the straight segment from `a` to `b`,
/// endpoints included, is free.
pub fn edge_free<C: CollisionChecker + ?Sized>(checker: &C, a: &[f64], b: &[f64], resolution: f64) -> bool {
    edge_free_counted(checker, a, b, resolution, &mut Vec::new()).0
}

struct Node {
    q: Vec<f64>,
    parent: Option<usize>,
}

struct Timer {
    time: Duration,
    queries: u64,
    buf: Vec<f64>,
}

impl Timer {
    fn edge<C: CollisionChecker + ?Sized>(&mut self, checker: &C, a: &[f64], b: &[f64], res: f64) -> bool {
        let t0 = Instant::now();
        let (free, n) = edge_free_counted(checker, a, b, res, &mut self.buf);
        self.time += t0.elapsed();
        self.queries += n;
        free
    }
}

/// Grows a tree from `start` until it connects to `goal` or the iteration
/// budget runs out. Deterministic for a fixed seed and checker.
pub fn rrt_plan<C: CollisionChecker + ?Sized>(
    start: &[f64],
    goal: &[f64],
    checker: &C,
    params: &RrtParams,
    bounds: &JointBounds,
) -> Result<PlanResult> {
    params.validate()?;
    let dof = checker.dof();
    check_dim(dof, start.len())?;
    check_dim(dof, goal.len())?;
    check_dim(dof, bounds.dof())?;

    let mut timer = Timer {
        time: Duration::ZERO,
        queries: 0,
        buf: Vec::new(),
    };
    if !timer.edge(checker, start, start, params.edge_resolution) {
        return Err(Error::InvalidArgument(
            "start configuration is in collision".into(),
        ));
    }
    if !timer.edge(checker, goal, goal, params.edge_resolution) {
        return Err(Error::InvalidArgument(
            "goal configuration is in collision".into(),
        ));
    }

    let mut tree = vec![Node {
        q: start.to_vec(),
        parent: None,
    }];
    let finish =
        |tree: &[Node], timer: &Timer, iterations: usize, last: Option<usize>| -> Result<PlanResult> {
            let path = match last {
                Some(mut i) => {
                    let mut rev = vec![Configuration::new(tree[i].q.clone())?];
                    while let Some(p) = tree[i].parent {
                        rev.push(Configuration::new(tree[p].q.clone())?);
                        i = p;
                    }
                    rev.reverse();
                    rev
                }
                None => Vec::new(),
            };
            Ok(PlanResult {
                path,
                iterations,
                checker_time: timer.time,
                checker_queries: timer.queries,
            })
        };

    if start == goal {
        return finish(&tree, &timer, 0, Some(0));
    }

    let step2 = params.step_size * params.step_size;
    let tol2 = params.goal_tolerance * params.goal_tolerance;
    // Tries to finish from node `idx`; returns the final node on success.
    let try_goal = |tree: &mut Vec<Node>, timer: &mut Timer, idx: usize| -> Option<usize> {
        let d2 = squared_distance(&tree[idx].q, goal);
        if d2 > step2 && d2 > tol2 {
            return None;
        }
        if d2 <= step2 && timer.edge(checker, &tree[idx].q, goal, params.edge_resolution) {
            tree.push(Node {
                q: goal.to_vec(),
                parent: Some(idx),
            });
            return Some(tree.len() - 1);
        }
        (d2 <= tol2).then_some(idx)
    };

    if let Some(last) = try_goal(&mut tree, &mut timer, 0) {
        return finish(&tree, &timer, 0, Some(last));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    for iteration in 1..=params.max_iterations {
        let target = if rng.random::<f64>() < params.goal_bias {
            goal.to_vec()
        } else {
            bounds.sample(&mut rng)
        };
        let nearest = tree
            .iter()
            .enumerate()
            .map(|(i, n)| (i, squared_distance(&n.q, &target)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
            .expect("tree has a root");
        let from = &tree[nearest].q;
        let dist = squared_distance(from, &target).sqrt();
        if dist == 0.0 {
            continue;
        }
        let scale = (params.step_size / dist).min(1.0);
        let new: Vec<f64> = from
            .iter()
            .zip(&target)
            .map(|(a, b)| a + (b - a) * scale)
            .collect();
        if !timer.edge(checker, from, &new, params.edge_resolution) {
            continue;
        }
        tree.push(Node {
            q: new,
            parent: Some(nearest),
        });
        let idx = tree.len() - 1;
        if let Some(last) = try_goal(&mut tree, &mut timer, idx) {
            return finish(&tree, &timer, iteration, Some(last));
        }
    }
    finish(&tree, &timer, params.max_iterations, None)
}

/// One configuration per row under a `q0,q1,...` header.
pub fn write_path_csv<W: Write>(path: &[Configuration], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if let Some(first) = path.first() {
        w.write_record((0..first.dof()).map(|j| format!("q{j}")))?;
    }
    for q in path {
        w.write_record(q.iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Aabb, ArmModel, ConvexPolygon, Vec2};
    use crate::kcd::{KinematicChecker, Label, Workspace};
    use std::f64::consts::FRAC_PI_2;

    /// Collision inside an axis-aligned box in joint space.
    struct BoxChecker {
        lo: Vec<f64>,
        hi: Vec<f64>,
    }

    impl CollisionChecker for BoxChecker {
        fn label(&self, q: &[f64]) -> Label {
            let inside = q
                .iter()
                .zip(&self.lo)
                .zip(&self.hi)
                .all(|((x, l), h)| x >= l && x <= h);
            if inside {
                Label::Collision
            } else {
                Label::Free
            }
        }
        fn dof(&self) -> usize {
            self.lo.len()
        }
    }

    fn open() -> BoxChecker {
        BoxChecker {
            lo: vec![10.0, 10.0],
            hi: vec![11.0, 11.0],
        }
    }

    #[test]
    fn edge_cases_of_edge_free() {
        let c = BoxChecker {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
        };
        assert!(edge_free(&c, &[2.0, 2.0], &[2.0, 2.0], 0.05));
        assert!(!edge_free(&c, &[2.0, 2.0], &[0.5, 0.5], 0.05));
        assert!(!edge_free(&c, &[-1.0, 0.5], &[2.0, 0.5], 0.05));
        assert!(edge_free(&c, &[-1.0, 1.5], &[2.0, 1.5], 0.05));
    }

    #[test]
    fn start_equals_goal() {
        let r = rrt_plan(
            &[0.1, 0.2],
            &[0.1, 0.2],
            &open(),
            &RrtParams::default(),
            &JointBounds::symmetric(2),
        )
        .unwrap();
        assert_eq!(r.path.len(), 1);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn goal_within_one_step() {
        let r = rrt_plan(
            &[0.0, 0.0],
            &[0.1, 0.1],
            &open(),
            &RrtParams::default(),
            &JointBounds::symmetric(2),
        )
        .unwrap();
        assert_eq!(r.path.len(), 2);
        assert_eq!(&*r.path[1], &[0.1, 0.1]);
        assert!(r.checker_queries > 0);
    }

    #[test]
    fn colliding_endpoints_are_rejected() {
        let c = BoxChecker {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
        };
        let p = RrtParams::default();
        let b = JointBounds::symmetric(2);
        assert!(rrt_plan(&[0.5, 0.5], &[2.0, 2.0], &c, &p, &b).is_err());
        assert!(rrt_plan(&[2.0, 2.0], &[0.5, 0.5], &c, &p, &b).is_err());
        assert!(rrt_plan(&[2.0], &[2.0, 2.0], &c, &p, &b).is_err());
    }

    #[test]
    fn path_around_a_box_is_valid() {
        let c = BoxChecker {
            lo: vec![-0.5, -2.0],
            hi: vec![0.5, 2.0],
        };
        let params = RrtParams {
            seed: 3,
            ..RrtParams::default()
        };
        let r = rrt_plan(&[-2.0, 0.0], &[2.0, 0.0], &c, &params, &JointBounds::symmetric(2)).unwrap();
        assert!(r.found());
        assert_eq!(&*r.path[0], &[-2.0, 0.0]);
        assert_eq!(&**r.path.last().unwrap(), &[2.0, 0.0]);
        for w in r.path.windows(2) {
            assert!(squared_distance(&w[0], &w[1]).sqrt() <= params.step_size + 1e-12);
            assert!(edge_free(&c, &w[0], &w[1], params.edge_resolution));
        }
        let again = rrt_plan(&[-2.0, 0.0], &[2.0, 0.0], &c, &params, &JointBounds::symmetric(2)).unwrap();
        assert_eq!(again.path, r.path);
    }

    #[test]
    fn enclosed_goal_is_unreachable() {
        // One link; blocks at +-90 degrees cut joint space (no wrap-around)
        // into pieces, and the goal lies beyond both.
        let arm = ArmModel::new(vec![1.0], 0.05, Vec2::ZERO).unwrap();
        let bounds = Aabb::centered(Vec2::ZERO, 2.0, 2.0);
        let up = ConvexPolygon::regular(Vec2::new(0.0, 0.6), 0.15, 6, 0.0).unwrap();
        let down = ConvexPolygon::regular(Vec2::new(0.0, -0.6), 0.15, 6, 0.0).unwrap();
        let checker = KinematicChecker::new(arm, Workspace::new(bounds, vec![up, down]));
        let params = RrtParams {
            max_iterations: 2000,
            ..RrtParams::default()
        };
        let start = [0.0];
        let goal = [FRAC_PI_2 + 1.2];
        let r = rrt_plan(&start, &goal, &checker, &params, &JointBounds::symmetric(1)).unwrap();
        assert!(!r.found());
        assert_eq!(r.iterations, 2000);
    }

    #[test]
    fn path_csv() {
        let path = vec![
            Configuration::new(vec![0.0, 1.0]).unwrap(),
            Configuration::new(vec![0.5, -1.5]).unwrap(),
        ];
        let mut out = Vec::new();
        write_path_csv(&path, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "q0,q1\n0,1\n0.5,-1.5\n");
    }
}
