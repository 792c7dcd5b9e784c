//! The Fastron model: a kernel perceptron over a fixed dataset whose weights
//! are corrected in place as labels change.
//!
//! The model keeps the weight vector `alpha` and the hypothesis vector
//! `F = G * alpha` at every training point. Changing one weight touches one
//! row of the Gram matrix, so `F` is maintained incrementally instead of being
//! recomputed.
//!
//! Each update iteration:
//!
//! 1. removes redundant support points, i.e. those still classified correctly
//!    without their own weight, largest leftover margin `y_i (F_i - alpha_i)`
//!    first;
//! 2. stops if every margin `y_i F_i` is positive;
//! 3. otherwise picks the point with the most negative margin and sets its
//!    weight so that its margin becomes exactly `r`, where `r = r_plus` for
//!    collision points and `r = 1` for free points.
//!
//! A larger `r_plus` pushes the boundary outward around collision points,
//! trading false positives for fewer missed collisions.

use std::io::{Read, Write};

use crate::dataset::{kernel_unchecked, read_f64, read_u32, truncated, Dataset};
use crate::error::{check_dim, Error, Result};
use crate::kcd::{CollisionChecker, Label};

pub const DEFAULT_MAX_UPDATES: usize = 5000;

#[derive(Debug, Clone, PartialEq)]
pub struct FastronModel {
    alpha: Vec<f64>,
    hypothesis: Vec<f64>,
    /// Indices with nonzero weight, ascending.
    support: Vec<usize>,
    r_plus: f64,
    max_updates: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct UpdateReport {
    pub converged: bool,
    /// Number of weight corrections applied.
    pub iterations: usize,
    pub support_count: usize,
    /// Support points removed as redundant over the whole update.
    pub removed_count: usize,
}

/// Outcome of a single iteration of [`FastronModel::update`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    /// All margins positive; nothing was corrected.
    Converged { removed: usize },
    /// The weight at `index` changed by `delta`.
    Corrected {
        index: usize,
        delta: f64,
        removed: usize,
    },
}

impl FastronModel {
    pub fn new(n: usize, r_plus: f64, max_updates: usize) -> Result<Self> {
        if !(r_plus >= 1.0 && r_plus.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "r_plus must be >= 1, got {r_plus}"
            )));
        }
        if max_updates == 0 {
            return Err(Error::InvalidArgument("max_updates must be positive".into()));
        }
        Ok(Self {
            alpha: vec![0.0; n],
            hypothesis: vec![0.0; n],
            support: Vec::new(),
            r_plus,
            max_updates,
        })
    }

    pub fn for_dataset(d: &Dataset, r_plus: f64, max_updates: usize) -> Result<Self> {
        Self::new(d.len(), r_plus, max_updates)
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// `F = G * alpha`, one entry per training point.
    pub fn hypothesis(&self) -> &[f64] {
        &self.hypothesis
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn r_plus(&self) -> f64 {
        self.r_plus
    }

    pub fn max_updates(&self) -> usize {
        self.max_updates
    }

    pub fn set_max_updates(&mut self, max_updates: usize) {
        self.max_updates = max_updates.max(1);
    }

    /// `y_i F_i`.
    #[inline]
    pub fn margin(&self, d: &Dataset, i: usize) -> f64 {
        d.label(i).sign() * self.hypothesis[i]
    }

    /// Replaces the weights and rebuilds `F` from scratch.
    pub fn set_alpha(&mut self, d: &Dataset, alpha: Vec<f64>) -> Result<()> {
        check_dim(d.len(), alpha.len())?;
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidArgument("non-finite weight".into()));
        }
        self.alpha = alpha;
        self.support = (0..self.alpha.len()).filter(|&i| self.alpha[i] != 0.0).collect();
        self.hypothesis = vec![0.0; self.alpha.len()];
        for &s in &self.support {
            let a = self.alpha[s];
            for (f, g) in self.hypothesis.iter_mut().zip(d.gram_row(s)) {
                *f += a * g;
            }
        }
        Ok(())
    }

    fn check_sized(&self, d: &Dataset) -> Result<()> {
        check_dim(self.len(), d.len())
    }

    /// `alpha_j += delta` with the matching update of `F`.
    fn shift_weight(&mut self, d: &Dataset, j: usize, delta: f64) {
        let was_support = self.alpha[j] != 0.0;
        self.alpha[j] += delta;
        for (f, g) in self.hypothesis.iter_mut().zip(d.gram_row(j)) {
            *f += delta * g;
        }
        let is_support = self.alpha[j] != 0.0;
        match (was_support, is_support) {
            (false, true) => {
                let pos = self.support.partition_point(|&s| s < j);
                self.support.insert(pos, j);
            }
            (true, false) => {
                let pos = self.support.partition_point(|&s| s < j);
                self.support.remove(pos);
            }
            _ => {}
        }
    }

    /// Zeroes every support point that would stay correctly classified
    /// without its own weight, largest leftover margin first. On return no
    /// support point satisfies `y_i (F_i - alpha_i) > 0`.
    pub fn remove_redundant(&mut self, d: &Dataset) -> Result<usize> {
        self.check_sized(d)?;
        Ok(self.remove_redundant_unchecked(d))
    }

    fn remove_redundant_unchecked(&mut self, d: &Dataset) -> usize {
        let mut removed = 0;
        loop {
            let mut best: Option<(usize, f64)> = None;
            for &i in &self.support {
                let m = d.label(i).sign() * (self.hypothesis[i] - self.alpha[i]);
                if m > 0.0 && best.is_none_or(|(_, bm)| m > bm) {
                    best = Some((i, m));
                }
            }
            let Some((j, _)) = best else { break };
            let a = self.alpha[j];
            // a + (-a) is exactly zero, so this also drops j from the support.
            self.shift_weight(d, j, -a);
            removed += 1;
        }
        removed
    }

    /// Most negative margin (lowest index on ties), or `None` if all are
    /// positive.
    fn worst_margin(&self, d: &Dataset) -> Option<usize> {
        let mut worst: Option<(usize, f64)> = None;
        for i in 0..self.len() {
            let m = self.margin(d, i);
            if m <= 0.0 && worst.is_none_or(|(_, wm)| m < wm) {
                worst = Some((i, m));
            }
        }
        worst.map(|(i, _)| i)
    }

    /// One iteration: redundant removal, convergence check, then one-step
    /// weight correction of the worst point.
    pub fn step(&mut self, d: &Dataset) -> Result<Step> {
        self.check_sized(d)?;
        Ok(self.step_unchecked(d))
    }

    fn step_unchecked(&mut self, d: &Dataset) -> Step {
        let removed = self.remove_redundant_unchecked(d);
        let Some(j) = self.worst_margin(d) else {
            return Step::Converged { removed };
        };
        let y = d.label(j).sign();
        let r = if y > 0.0 { self.r_plus } else { 1.0 };
        let delta = r * y - self.hypothesis[j];
        self.shift_weight(d, j, delta);
        Step::Corrected {
            index: j,
            delta,
            removed,
        }
    }

    /// Runs up to `max_updates` corrections. Non-convergence is reported, and
    /// the model is left in its last state.
    pub fn update(&mut self, d: &Dataset) -> Result<UpdateReport> {
        self.check_sized(d)?;
        let mut report = UpdateReport::default();
        for _ in 0..self.max_updates {
            match self.step_unchecked(d) {
                Step::Converged { removed } => {
                    report.removed_count += removed;
                    report.converged = true;
                    report.support_count = self.support.len();
                    return Ok(report);
                }
                Step::Corrected { removed, .. } => {
                    report.removed_count += removed;
                    report.iterations += 1;
                }
            }
        }
        report.converged = self.worst_margin(d).is_none();
        report.support_count = self.support.len();
        Ok(report)
    }

    /// Raw kernel sum over the support set at `q`.
    pub fn hypothesis_at(&self, d: &Dataset, q: &[f64]) -> f64 {
        debug_assert_eq!(q.len(), d.dof());
        let gamma = d.gamma();
        self.support
            .iter()
            .map(|&i| self.alpha[i] * kernel_unchecked(d.point(i), q, gamma))
            .sum()
    }

    /// Proxy collision check: sign of the hypothesis, zero counting as
    /// collision.
    pub fn classify(&self, d: &Dataset, q: &[f64]) -> Label {
        Label::from_score(self.hypothesis_at(d, q))
    }

    /// Contiguous copy of the support set for fast repeated queries.
    pub fn classifier(&self, d: &Dataset) -> FastronClassifier {
        let dof = d.dof();
        let mut points = Vec::with_capacity(self.support.len() * dof);
        let mut weights = Vec::with_capacity(self.support.len());
        for &i in &self.support {
            points.extend_from_slice(d.point(i));
            weights.push(self.alpha[i]);
        }
        // Skipped terms total at most sum|alpha| * e^-CUTOFF_EXPONENT; both
        // sums carry rounding error below n * eps * sum|alpha| each.
        let abs_sum: f64 = weights.iter().map(|w| w.abs()).sum();
        let slack = 4.0 * weights.len() as f64 * f64::EPSILON;
        FastronClassifier {
            dof,
            gamma: d.gamma(),
            threshold: abs_sum * ((-CUTOFF_EXPONENT).exp() + slack),
            points,
            weights,
        }
    }

    /// Writes `N: u32, r_plus: f64` and then `alpha` as `f64`, little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let n = u32::try_from(self.len()).map_err(|_| Error::Format("N exceeds u32".into()))?;
        w.write_all(&n.to_le_bytes())?;
        w.write_all(&self.r_plus.to_le_bytes())?;
        for a in &self.alpha {
            w.write_all(&a.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a model written by [`FastronModel::write_binary`] and rebuilds
    /// `F` against `d`.
    pub fn read_binary<R: Read>(mut r: R, d: &Dataset) -> Result<Self> {
        let n = read_u32(&mut r)? as usize;
        check_dim(d.len(), n)?;
        let r_plus = read_f64(&mut r)?;
        let mut alpha = Vec::with_capacity(n);
        for _ in 0..n {
            alpha.push(read_f64(&mut r)?);
        }
        let mut extra = [0u8; 1];
        if r.read(&mut extra).map_err(truncated)? != 0 {
            return Err(Error::Format("trailing bytes after model".into()));
        }
        let mut model = FastronModel::new(n, r_plus, DEFAULT_MAX_UPDATES)?;
        model.set_alpha(d, alpha)?;
        Ok(model)
    }
}

/// Kernel terms whose exponent exceeds the nearest support point's by more
/// than this are bounded instead of evaluated when classifying.
pub const CUTOFF_EXPONENT: f64 = 25.0;

/// Snapshot of a trained model's support set, laid out contiguously.
#[derive(Debug, Clone)]
pub struct FastronClassifier {
    dof: usize,
    gamma: f64,
    points: Vec<f64>,
    weights: Vec<f64>,
    /// A first-pass partial sum beyond this has the full sum's sign.
    threshold: f64,
}

#[inline(always)]
fn sq_dist<const D: usize>(a: &[f64], b: &[f64]) -> f64 {
    let (a, b): (&[f64; D], &[f64; D]) = (a.try_into().unwrap(), b.try_into().unwrap());
    let mut d2 = 0.0;
    for j in 0..D {
        let t = a[j] - b[j];
        d2 += t * t;
    }
    d2
}

impl FastronClassifier {
    pub fn support_count(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn score(&self, q: &[f64]) -> f64 {
        let neg_gamma = -self.gamma;
        let mut sum = 0.0;
        for (p, &w) in self.points.chunks_exact(self.dof).zip(&self.weights) {
            let d2: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
            sum += w * (neg_gamma * d2).exp();
        }
        sum
    }

    /// Same verdict as `Label::from_score(self.score(q))`, usually with far
    /// fewer `exp` calls. Terms with exponent `gamma * d^2` at or above a
    /// cutoff are skipped; each is at most `|alpha| * e^-cutoff`, so a partial
    /// sum that beats their total plus rounding slack already has the full
    /// sum's sign. The first pass uses `CUTOFF_EXPONENT`. A query far from
    /// every support point gets a second pass with everything rescaled by the
    /// nearest term. Anything still undecided takes the full sum.
    #[inline]
    pub fn classify(&self, q: &[f64]) -> Label {
        match self.dof {
            1 => self.classify_with(q, 1, sq_dist::<1>),
            2 => self.classify_with(q, 2, sq_dist::<2>),
            3 => self.classify_with(q, 3, sq_dist::<3>),
            4 => self.classify_with(q, 4, sq_dist::<4>),
            n => self.classify_with(q, n, |a, b| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()),
        }
    }

    #[inline(always)]
    fn classify_with<F: Fn(&[f64], &[f64]) -> f64>(&self, q: &[f64], stride: usize, dist: F) -> Label {
        let near = self.near_sum(q, stride, &dist, CUTOFF_EXPONENT);
        if near.abs() > self.threshold {
            return Label::from_score(near);
        }
        let mut d2_min = f64::INFINITY;
        for x in self.points.chunks_exact(stride) {
            d2_min = d2_min.min(dist(x, q));
        }
        let e_min = self.gamma * d2_min;
        // Past this every term is subnormal or zero and the bound means little.
        if e_min < 700.0 {
            let near = self.near_sum(q, stride, &dist, e_min + CUTOFF_EXPONENT);
            if near.abs() > self.threshold * (-e_min).exp() {
                return Label::from_score(near);
            }
        }
        Label::from_score(self.score(q))
    }

    #[inline(always)]
    fn near_sum<F: Fn(&[f64], &[f64]) -> f64>(&self, q: &[f64], stride: usize, dist: &F, cutoff: f64) -> f64 {
        let mut sum = 0.0;
        for (x, &w) in self.points.chunks_exact(stride).zip(&self.weights) {
            let e = self.gamma * dist(x, q);
            if e < cutoff {
                sum += w * (-e).exp();
            }
        }
        sum
    }
}

impl CollisionChecker for FastronClassifier {
    #[inline]
    fn label(&self, q: &[f64]) -> Label {
        self.classify(q)
    }

    fn dof(&self) -> usize {
        self.dof
    }
}
