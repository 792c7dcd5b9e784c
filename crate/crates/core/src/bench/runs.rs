use std::io::Write;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::metrics::{evaluate, Metrics};
use super::scene::{obstacle_center, Scene};
use super::{derive_seed, ScenarioSpec};
use crate::active_learning::ActiveLearner;
use crate::dataset::{build_dataset, Configuration, Dataset};
use crate::error::Result;
use crate::fastron::FastronModel;
use crate::geometry::{ArmModel, ConvexPolygon};
use crate::kcd::{offset_to, CollisionChecker, KinematicChecker};
use crate::planner::{edge_free, rrt_plan, PlanResult, RrtParams};

const SCENE: u64 = 1;
const DATASET: u64 = 2;
const EVAL: u64 = 3;
const LEARN: u64 = 4;
const TRIAL: u64 = 5;
const PLAN: u64 = 6;

fn micros(d: Duration) -> u64 {
    d.as_micros() as u64
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Serializes rows with a header. `Option` fields become empty cells.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn dataset_for(spec: &ScenarioSpec) -> Result<Dataset> {
    let sampler = spec.sampler_for(derive_seed(spec.seed, DATASET, 0));
    build_dataset(&sampler, &spec.bounds(), spec.gamma)
}

/// Labels every point, trains from zero weights, and returns the training time.
fn train(
    spec: &ScenarioSpec,
    d: &mut Dataset,
    checker: &KinematicChecker,
) -> Result<(FastronModel, Duration)> {
    checker.label_all(d)?;
    let mut model = FastronModel::for_dataset(d, spec.r_plus, spec.max_updates)?;
    let t0 = Instant::now();
    model.update(d)?;
    Ok((model, t0.elapsed()))
}

/// One row per obstacle count, averaged over `spec.scenes` scenes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaticRow {
    pub obstacle_count: usize,
    pub scenes: usize,
    /// Mean over scenes that had any colliding evaluation sample.
    pub recall: Option<f64>,
    pub fpr: Option<f64>,
    pub support_mean: f64,
    pub train_us: u64,
    pub eval_queries: usize,
    /// Time for all `eval_queries` FCD queries, scene mean.
    pub fcd_batch_us: u64,
    pub kcd_batch_us: u64,
    /// Summed KCD time over summed FCD time.
    pub ratio: f64,
}

/// Static scenes with 0..K obstacles. Scene `s` uses the same seed at every
/// count, so the obstacles at count `k` are the first `k` of those at `k + 1`.
pub fn run_static_bench(spec: &ScenarioSpec) -> Result<Vec<StaticRow>> {
    spec.validate()?;
    let arm = spec.arm.build()?;
    let base = dataset_for(spec)?;
    let mut rows = Vec::with_capacity(spec.sweep_obstacles.len());
    for &count in &spec.sweep_obstacles {
        let mut per_scene: Vec<(Metrics, Duration)> = Vec::with_capacity(spec.scenes);
        for s in 0..spec.scenes {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, SCENE, s as u64));
            let scene = Scene::generate(spec, &arm, count, &mut rng)?;
            let checker = KinematicChecker::new(arm.clone(), scene.workspace());
            let mut d = base.clone();
            let (model, train_time) = train(spec, &mut d, &checker)?;
            let eval_seed = derive_seed(spec.seed, EVAL, s as u64);
            let metrics = evaluate(
                &model,
                &d,
                &checker,
                spec.eval_size,
                eval_seed,
                spec.record_timing,
            )?;
            per_scene.push((metrics, train_time));
        }
        let n = per_scene.len() as u32;
        let sum_fcd: Duration = per_scene.iter().map(|(m, _)| m.fcd_time_mean).sum();
        let sum_kcd: Duration = per_scene.iter().map(|(m, _)| m.kcd_time_mean).sum();
        let train_total: Duration = per_scene.iter().map(|(_, t)| *t).sum();
        let batch = |mean_per_query: Duration| micros(mean_per_query * spec.eval_size as u32 / n);
        rows.push(StaticRow {
            obstacle_count: count,
            scenes: spec.scenes,
            recall: mean(per_scene.iter().filter_map(|(m, _)| m.recall)),
            fpr: mean(per_scene.iter().filter_map(|(m, _)| m.fpr)),
            support_mean: mean(per_scene.iter().map(|(m, _)| m.support_count as f64)).unwrap_or(0.0),
            train_us: if spec.record_timing {
                micros(train_total / n)
            } else {
                0
            },
            eval_queries: spec.eval_size,
            fcd_batch_us: batch(sum_fcd),
            kcd_batch_us: batch(sum_kcd),
            ratio: if sum_fcd > Duration::ZERO {
                sum_kcd.as_secs_f64() / sum_fcd.as_secs_f64()
            } else {
                0.0
            },
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleRow {
    pub scene: usize,
    pub cycle: usize,
    pub relabeled: usize,
    pub flips: usize,
    pub kcd_queries: u64,
    pub support: usize,
    pub converged: bool,
    pub iterations: usize,
    pub recall: Option<f64>,
    pub fpr: Option<f64>,
    /// Selection, relabeling and model update together.
    pub update_us: u64,
    pub fcd_batch_us: u64,
    pub kcd_batch_us: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicSummary {
    pub n: usize,
    pub allowance: usize,
    pub scenes: usize,
    pub cycles: usize,
    /// Mean of per-cycle values.
    pub recall: Option<f64>,
    pub fpr: Option<f64>,
    pub update_us_mean: f64,
    pub support_mean: f64,
    pub max_kcd_queries: u64,
    pub budget_respected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicReport {
    pub cycles: Vec<CycleRow>,
    pub summary: DynamicSummary,
}

/// Train on the initial layout, then per cycle: move obstacles, run one
/// update cycle, evaluate on fresh samples.
pub fn run_dynamic_bench(spec: &ScenarioSpec) -> Result<DynamicReport> {
    spec.validate()?;
    let arm = spec.arm.build()?;
    let base = dataset_for(spec)?;
    let allowance = spec.resolved_allowance();
    let mut rows = Vec::with_capacity(spec.scenes * spec.cycles);
    for s in 0..spec.scenes {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, SCENE, s as u64));
        let mut scene = Scene::generate(spec, &arm, spec.obstacles.count, &mut rng)?;
        let mut checker = KinematicChecker::new(arm.clone(), scene.workspace());
        let mut d = base.clone();
        let (mut model, _) = train(spec, &mut d, &checker)?;
        let mut learner = ActiveLearner::new(spec.learning_params(derive_seed(spec.seed, LEARN, s as u64)));
        for cycle in 1..=spec.cycles {
            scene.advance();
            checker.set_workspace(scene.workspace());
            let stats = learner.update_cycle(&mut model, &mut d, &checker)?;
            let eval_seed = derive_seed(spec.seed, EVAL, (s * spec.cycles + cycle) as u64);
            let m = evaluate(
                &model,
                &d,
                &checker,
                spec.eval_size,
                eval_seed,
                spec.record_timing,
            )?;
            let t = |d: Duration| if spec.record_timing { micros(d) } else { 0 };
            rows.push(CycleRow {
                scene: s,
                cycle,
                relabeled: stats.relabeled,
                flips: stats.flips,
                kcd_queries: stats.kcd_queries,
                support: stats.update.support_count,
                converged: stats.update.converged,
                iterations: stats.update.iterations,
                recall: m.recall,
                fpr: m.fpr,
                update_us: t(stats.total_time()),
                fcd_batch_us: t(m.fcd_time_mean * spec.eval_size as u32),
                kcd_batch_us: t(m.kcd_time_mean * spec.eval_size as u32),
            });
        }
    }
    let summary = DynamicSummary {
        n: spec.sampler.n,
        allowance,
        scenes: spec.scenes,
        cycles: spec.cycles,
        recall: mean(rows.iter().filter_map(|r| r.recall)),
        fpr: mean(rows.iter().filter_map(|r| r.fpr)),
        update_us_mean: mean(rows.iter().map(|r| r.update_us as f64)).unwrap_or(0.0),
        support_mean: mean(rows.iter().map(|r| r.support as f64)).unwrap_or(0.0),
        max_kcd_queries: rows.iter().map(|r| r.kcd_queries).max().unwrap_or(0),
        budget_respected: rows.iter().all(|r| r.kcd_queries <= allowance as u64),
    };
    Ok(DynamicReport {
        cycles: rows,
        summary,
    })
}

/// One dynamic run per (N, A/N) pair of the sweep lists.
pub fn run_dynamic_sweep(spec: &ScenarioSpec) -> Result<Vec<DynamicSummary>> {
    let mut out = Vec::new();
    for &n in &spec.sweep_n {
        for &fraction in &spec.sweep_allowance_fraction {
            let mut s = spec.clone();
            s.sampler.n = n;
            s.allowance = None;
            s.allowance_fraction = fraction;
            out.push(run_dynamic_bench(&s)?.summary);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RrtRow {
    pub trial: usize,
    pub replan: usize,
    pub skipped: bool,
    pub placement_attempts: usize,
    pub update_cycles: usize,
    pub fcd_found: bool,
    pub kcd_found: bool,
    pub fcd_update_us: u64,
    pub fcd_check_us: u64,
    /// Update plus collision checking, the FCD planner's collision stage.
    pub fcd_total_us: u64,
    pub kcd_total_us: u64,
    pub fcd_queries: u64,
    pub kcd_queries: u64,
    pub fcd_waypoints: usize,
    pub kcd_waypoints: usize,
    /// Fine-resolution samples along the path, and how many the kinematic
    /// checker finds free.
    pub fcd_samples: u64,
    pub fcd_free_samples: u64,
    pub kcd_samples: u64,
    pub kcd_free_samples: u64,
}

impl RrtRow {
    pub fn fcd_valid_fraction(&self) -> Option<f64> {
        (self.fcd_samples > 0).then(|| self.fcd_free_samples as f64 / self.fcd_samples as f64)
    }

    pub fn kcd_valid_fraction(&self) -> Option<f64> {
        (self.kcd_samples > 0).then(|| self.kcd_free_samples as f64 / self.kcd_samples as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RrtSummary {
    pub trials: usize,
    pub replans: usize,
    pub skipped: usize,
    pub fcd_found: usize,
    pub kcd_found: usize,
    pub fcd_time_mean_us: f64,
    pub kcd_time_mean_us: f64,
    /// KCD mean over FCD mean.
    pub ratio: f64,
    /// Free share of all fine samples over all found FCD paths.
    pub fcd_valid_pooled: Option<f64>,
    pub fcd_valid_min: Option<f64>,
    pub kcd_valid_pooled: Option<f64>,
    pub kcd_valid_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RrtReport {
    pub rows: Vec<RrtRow>,
    pub summary: RrtSummary,
    /// First FCD path found, for dumping.
    pub example_path: Vec<Configuration>,
}

/// `(free, total)` over samples at spacing `resolution` along the path,
/// endpoints included, as judged by `truth`. `(0, 0)` for an empty path.
pub fn path_validity(path: &[Configuration], truth: &KinematicChecker, resolution: f64) -> (u64, u64) {
    let (mut free, mut total) = (0u64, 0u64);
    if path.is_empty() {
        return (free, total);
    }
    let mut tally = |q: &[f64]| {
        total += 1;
        if !truth.check_raw(q).is_collision() {
            free += 1;
        }
    };
    tally(&path[0]);
    for w in path.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let dist = a
            .iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        let steps = (dist / resolution).ceil().max(1.0) as usize;
        let mut q = vec![0.0; a.len()];
        for k in 1..=steps {
            let t = k as f64 / steps as f64;
            for (j, v) in q.iter_mut().enumerate() {
                *v = a[j] + t * (b[j] - a[j]);
            }
            tally(&q);
        }
    }
    (free, total)
}

fn place(
    spec: &ScenarioSpec,
    arm: &ArmModel,
    shapes: &[ConvexPolygon],
    rng: &mut ChaCha8Rng,
) -> Vec<ConvexPolygon> {
    shapes
        .iter()
        .map(|o| o.translated(offset_to(o, obstacle_center(spec, arm, rng))))
        .collect()
}

fn pooled(counts: impl Iterator<Item = (u64, u64)>) -> Option<f64> {
    let (free, total) = counts.fold((0, 0), |(f, t), (a, b)| (f + a, t + b));
    (total > 0).then(|| free as f64 / total as f64)
}

fn plan_or_fail<C: CollisionChecker + ?Sized>(
    start: &Configuration,
    goal: &Configuration,
    checker: &C,
    params: &RrtParams,
    spec: &ScenarioSpec,
) -> Result<PlanResult> {
    // A proxy that misjudges an endpoint as blocked cannot plan at all.
    if checker.label(start).is_collision() || checker.label(goal).is_collision() {
        return Ok(PlanResult::default());
    }
    rrt_plan(start, goal, checker, params, &spec.bounds())
}

/// Per trial: random start and goal, obstacles trained once, then for each
/// replan the obstacles jump to a placement that blocks the straight
/// joint-space segment. The FCD planner first runs update cycles until one
/// sees no label flips (at most `spec.cycles`), and that cost is charged to
/// it. The KCD planner checks edges with [`KinematicChecker::for_edges`], so
/// its paths are free between samples too; start and goal must pass that
/// check. Both plans are revalidated with the kinematic checker at a tenth of
/// the edge resolution.
pub fn run_rrt_bench(spec: &ScenarioSpec) -> Result<RrtReport> {
    spec.validate()?;
    let arm = spec.arm.build()?;
    let base = dataset_for(spec)?;
    let bounds = spec.bounds();
    let fine = spec.rrt.edge_resolution / 10.0;
    let t = |d: Duration| if spec.record_timing { micros(d) } else { 0 };
    let mut rows = Vec::new();
    let mut example_path = Vec::new();

    for trial in 0..spec.scenes {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, TRIAL, trial as u64));
        let mut scene = Scene::generate(spec, &arm, spec.obstacles.count, &mut rng)?;
        let shapes = scene.obstacles().to_vec();
        let (start, goal) = loop {
            let a = bounds.sample(&mut rng);
            let b = bounds.sample(&mut rng);
            let dist = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            if dist >= 2.0 {
                break (Configuration::new(a)?, Configuration::new(b)?);
            }
        };
        let mut checker = KinematicChecker::new(arm.clone(), scene.workspace());
        let mut d = base.clone();
        let (mut model, _) = train(spec, &mut d, &checker)?;
        let mut learner =
            ActiveLearner::new(spec.learning_params(derive_seed(spec.seed, LEARN, trial as u64)));

        for replan in 0..spec.replans {
            let mut attempts = 0;
            let placed = loop {
                if attempts == spec.placement_retries {
                    break None;
                }
                attempts += 1;
                let candidate = place(spec, &arm, &shapes, &mut rng);
                scene.set_obstacles(candidate);
                checker.set_workspace(scene.workspace());
                let edges = checker.for_edges(spec.rrt.edge_resolution)?;
                let ok = !edges.check_raw(&start).is_collision()
                    && !edges.check_raw(&goal).is_collision()
                    && !edge_free(&checker, &start, &goal, spec.rrt.edge_resolution);
                if ok {
                    break Some(());
                }
            };
            let mut row = RrtRow {
                trial,
                replan,
                skipped: placed.is_none(),
                placement_attempts: attempts,
                update_cycles: 0,
                fcd_found: false,
                kcd_found: false,
                fcd_update_us: 0,
                fcd_check_us: 0,
                fcd_total_us: 0,
                kcd_total_us: 0,
                fcd_queries: 0,
                kcd_queries: 0,
                fcd_waypoints: 0,
                kcd_waypoints: 0,
                fcd_samples: 0,
                fcd_free_samples: 0,
                kcd_samples: 0,
                kcd_free_samples: 0,
            };
            if placed.is_none() {
                rows.push(row);
                continue;
            }

            let mut update_time = Duration::ZERO;
            for _ in 0..spec.cycles.max(1) {
                let stats = learner.update_cycle(&mut model, &mut d, &checker)?;
                row.update_cycles += 1;
                update_time += stats.total_time();
                if stats.flips == 0 {
                    break;
                }
            }
            let t0 = Instant::now();
            let classifier = model.classifier(&d);
            update_time += t0.elapsed();

            let params = RrtParams {
                seed: derive_seed(spec.seed, PLAN, (trial * spec.replans + replan) as u64),
                ..spec.rrt.clone()
            };
            let fcd = plan_or_fail(&start, &goal, &classifier, &params, spec)?;
            let kcd = plan_or_fail(
                &start,
                &goal,
                &checker.for_edges(params.edge_resolution)?,
                &params,
                spec,
            )?;

            row.fcd_found = fcd.found();
            row.kcd_found = kcd.found();
            row.fcd_update_us = t(update_time);
            row.fcd_check_us = t(fcd.checker_time);
            row.fcd_total_us = t(update_time + fcd.checker_time);
            row.kcd_total_us = t(kcd.checker_time);
            row.fcd_queries = fcd.checker_queries;
            row.kcd_queries = kcd.checker_queries;
            row.fcd_waypoints = fcd.path.len();
            row.kcd_waypoints = kcd.path.len();
            (row.fcd_free_samples, row.fcd_samples) = path_validity(&fcd.path, &checker, fine);
            (row.kcd_free_samples, row.kcd_samples) = path_validity(&kcd.path, &checker, fine);
            if example_path.is_empty() && fcd.found() {
                example_path = fcd.path;
            }
            rows.push(row);
        }
    }

    let run: Vec<&RrtRow> = rows.iter().filter(|r| !r.skipped).collect();
    let fcd_mean = mean(run.iter().map(|r| r.fcd_total_us as f64)).unwrap_or(0.0);
    let kcd_mean = mean(run.iter().map(|r| r.kcd_total_us as f64)).unwrap_or(0.0);
    let min = |v: Vec<f64>| v.into_iter().reduce(f64::min);
    let summary = RrtSummary {
        trials: spec.scenes,
        replans: run.len(),
        skipped: rows.len() - run.len(),
        fcd_found: run.iter().filter(|r| r.fcd_found).count(),
        kcd_found: run.iter().filter(|r| r.kcd_found).count(),
        fcd_time_mean_us: fcd_mean,
        kcd_time_mean_us: kcd_mean,
        ratio: if fcd_mean > 0.0 { kcd_mean / fcd_mean } else { 0.0 },
        fcd_valid_pooled: pooled(run.iter().map(|r| (r.fcd_free_samples, r.fcd_samples))),
        fcd_valid_min: min(run.iter().filter_map(|r| r.fcd_valid_fraction()).collect()),
        kcd_valid_pooled: pooled(run.iter().map(|r| (r.kcd_free_samples, r.kcd_samples))),
        kcd_valid_min: min(run.iter().filter_map(|r| r.kcd_valid_fraction()).collect()),
    };
    Ok(RrtReport {
        rows,
        summary,
        example_path,
    })
}

/// Dataset point with its kinematic label for scene 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRow {
    pub index: usize,
    pub q: Vec<f64>,
    pub label: i8,
}

/// Labels the scenario's dataset against its first scene.
pub fn label_dump(spec: &ScenarioSpec) -> Result<Vec<LabelRow>> {
    spec.validate()?;
    let arm = spec.arm.build()?;
    let mut d = dataset_for(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, SCENE, 0));
    let scene = Scene::generate(spec, &arm, spec.obstacles.count, &mut rng)?;
    KinematicChecker::new(arm, scene.workspace()).label_all(&mut d)?;
    Ok((0..d.len())
        .map(|i| LabelRow {
            index: i,
            q: d.point(i).to_vec(),
            label: d.label(i).value(),
        })
        .collect())
}

/// `index,q0,..,q{dof-1},label`.
pub fn write_label_csv<W: Write>(rows: &[LabelRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let dof = rows.first().map_or(0, |r| r.q.len());
    let mut header = vec!["index".to_string()];
    header.extend((0..dof).map(|j| format!("q{j}")));
    header.push("label".into());
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.index.to_string()];
        rec.extend(r.q.iter().map(|v| v.to_string()));
        rec.push(r.label.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
