use std::hint::black_box;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Dataset, JointBounds};
use crate::error::{check_dim, Error, Result};
use crate::fastron::FastronModel;
use crate::kcd::{CollisionChecker, KinematicChecker, Label};

/// Counts of (truth, prediction) pairs, collision being positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: u64,
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn record(&mut self, truth: Label, predicted: Label) {
        match (truth.is_collision(), predicted.is_collision()) {
            (true, true) => self.tp += 1,
            (true, false) => self.fn_ += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    /// `TP / (TP + FN)`, or `None` without truth positives.
    pub fn recall(&self) -> Option<f64> {
        let pos = self.tp + self.fn_;
        (pos > 0).then(|| self.tp as f64 / pos as f64)
    }

    /// `FP / (FP + TN)`, or `None` without truth negatives.
    pub fn fpr(&self) -> Option<f64> {
        let neg = self.fp + self.tn;
        (neg > 0).then(|| self.fp as f64 / neg as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    pub confusion: Confusion,
    pub recall: Option<f64>,
    pub fpr: Option<f64>,
    pub fcd_time_mean: Duration,
    pub kcd_time_mean: Duration,
    /// `kcd_time_mean / fcd_time_mean`; zero when timing is off.
    pub ratio: f64,
    pub update_time_mean: Duration,
    pub support_count: usize,
}

impl Metrics {
    pub fn from_confusion(confusion: Confusion) -> Self {
        Self {
            confusion,
            recall: confusion.recall(),
            fpr: confusion.fpr(),
            ..Self::default()
        }
    }
}

/// Timing passes per evaluation; each side keeps its fastest pass.
pub const TIMING_REPEATS: usize = 3;
const TIMING_CHUNKS: usize = 20;

fn time_chunk<F: FnMut(&[f64]) -> Label>(chunk: &[f64], dof: usize, mut f: F) -> Duration {
    let t0 = Instant::now();
    for q in chunk.chunks_exact(dof) {
        black_box(f(black_box(q)));
    }
    t0.elapsed()
}

/// Labels `m` fresh uniform configurations with `truth` and `predictor`.
/// Timing runs single-threaded with the two checkers interleaved chunk by
/// chunk, so slow spells on the machine hit both; means divide by `m`.
pub fn evaluate_with<P: CollisionChecker + ?Sized>(
    predictor: &P,
    truth: &KinematicChecker,
    m: usize,
    seed: u64,
    record_timing: bool,
) -> Result<Metrics> {
    let dof = truth.arm().dof();
    check_dim(dof, predictor.dof())?;
    if m == 0 {
        return Err(Error::InvalidArgument(
            "evaluation needs at least one query".into(),
        ));
    }
    let bounds = JointBounds::symmetric(dof);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let queries: Vec<f64> = (0..m).flat_map(|_| bounds.sample(&mut rng)).collect();

    let mut confusion = Confusion::default();
    for q in queries.chunks_exact(dof) {
        confusion.record(truth.check_raw(q), predictor.label(q));
    }
    let mut metrics = Metrics::from_confusion(confusion);
    if record_timing {
        let chunk_len = m.div_ceil(TIMING_CHUNKS) * dof;
        let (mut kcd_best, mut fcd_best) = (Duration::MAX, Duration::MAX);
        for _ in 0..TIMING_REPEATS {
            let (mut kcd, mut fcd) = (Duration::ZERO, Duration::ZERO);
            for chunk in queries.chunks(chunk_len) {
                kcd += time_chunk(chunk, dof, |q| truth.check_raw(q));
                fcd += time_chunk(chunk, dof, |q| predictor.label(q));
            }
            kcd_best = kcd_best.min(kcd);
            fcd_best = fcd_best.min(fcd);
        }
        metrics.kcd_time_mean = kcd_best / m as u32;
        metrics.fcd_time_mean = fcd_best / m as u32;
        let fcd = fcd_best.as_secs_f64();
        metrics.ratio = if fcd > 0.0 {
            kcd_best.as_secs_f64() / fcd
        } else {
            0.0
        };
    }
    Ok(metrics)
}

/// Evaluates a trained model against the kinematic checker.
pub fn evaluate(
    model: &FastronModel,
    d: &Dataset,
    truth: &KinematicChecker,
    m: usize,
    seed: u64,
    record_timing: bool,
) -> Result<Metrics> {
    let classifier = model.classifier(d);
    let mut metrics = evaluate_with(&classifier, truth, m, seed, record_timing)?;
    metrics.support_count = classifier.support_count();
    Ok(metrics)
}

/// Spearman rank correlation with average ranks for ties. `None` when either
/// side is constant or has fewer than two values.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}
