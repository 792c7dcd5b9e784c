//! Choosing which dataset points to relabel after the workspace changes, and
//! the select / relabel / update cycle built on it.
//!
//! Selection spends a fixed allowance `A` of collision checks in two stages.
//! Exploitation takes the current support points, which sit near the decision
//! boundary, then grows the set with each support point's 1st, 2nd, ...
//! nearest non-support neighbor until `ceil(p * A)` points are marked or
//! `k_ns` neighbor rounds are used. Exploration spends whatever is left on
//! uniformly random points, to catch obstacles that appear or jump.

use std::time::{Duration, Instant};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::fastron::{FastronModel, UpdateReport};
use crate::kcd::{relabel, KinematicChecker};

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveLearningParams {
    /// Collision checks allowed per cycle, `A`.
    pub allowance: usize,
    /// Share of the allowance reserved for exploitation, `p`.
    pub exploit_proportion: f64,
    /// Maximum neighbor rank added per support point.
    pub k_ns: usize,
    pub seed: u64,
}

impl ActiveLearningParams {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.allowance > n {
            return Err(Error::InvalidArgument(format!(
                "allowance {} exceeds dataset size {n}",
                self.allowance
            )));
        }
        if !(0.0..=1.0).contains(&self.exploit_proportion) {
            return Err(Error::InvalidArgument(format!(
                "exploit proportion {} outside [0, 1]",
                self.exploit_proportion
            )));
        }
        Ok(())
    }

    /// `ceil(p * A)`.
    pub fn exploit_target(&self) -> usize {
        (self.exploit_proportion * self.allowance as f64).ceil() as usize
    }
}

/// Picks at most `A` distinct indices to relabel. The allowance is clamped
/// to the dataset size.
pub fn select_relabel_set<R: Rng + ?Sized>(
    d: &Dataset,
    support: &[usize],
    params: &ActiveLearningParams,
    rng: &mut R,
) -> Vec<usize> {
    let n = d.len();
    let allowance = params.allowance.min(n);
    if allowance == 0 {
        return Vec::new();
    }
    let target = params.exploit_target().min(allowance);
    let mut chosen = vec![false; n];
    let mut r: Vec<usize> = Vec::with_capacity(allowance);

    if support.len() <= allowance {
        for &s in support {
            chosen[s] = true;
            r.push(s);
        }
        if r.len() < target && params.k_ns > 0 {
            let is_support = chosen.clone();
            let neighbors: Vec<Vec<usize>> = support
                .iter()
                .map(|&s| d.nearest_nonsupport(s, &is_support, params.k_ns))
                .collect();
            for k in 0..params.k_ns {
                if r.len() >= target {
                    break;
                }
                // The whole k-th neighbor batch goes in, capped by the allowance.
                for j in neighbors.iter().filter_map(|nb| nb.get(k).copied()) {
                    if r.len() == allowance {
                        break;
                    }
                    if !chosen[j] {
                        chosen[j] = true;
                        r.push(j);
                    }
                }
            }
        }
    } else {
        for i in index::sample(rng, support.len(), allowance) {
            let s = support[i];
            chosen[s] = true;
            r.push(s);
        }
    }

    let remaining = allowance - r.len();
    if remaining > 0 {
        let pool: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
        for i in index::sample(rng, pool.len(), remaining) {
            r.push(pool[i]);
        }
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CycleStats {
    pub relabeled: usize,
    pub flips: usize,
    pub kcd_queries: u64,
    pub update: UpdateReport,
    pub select_time: Duration,
    pub kcd_time: Duration,
    pub update_time: Duration,
}

impl CycleStats {
    /// Active learning plus model update, the cost of keeping the model
    /// current.
    pub fn total_time(&self) -> Duration {
        self.select_time + self.kcd_time + self.update_time
    }
}

/// Owns the selection RNG so successive cycles draw fresh samples while the
/// whole sequence stays reproducible from the seed.
#[derive(Debug, Clone)]
pub struct ActiveLearner {
    params: ActiveLearningParams,
    rng: ChaCha8Rng,
}

impl ActiveLearner {
    pub fn new(params: ActiveLearningParams) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(params.seed);
        Self { params, rng }
    }

    pub fn params(&self) -> &ActiveLearningParams {
        &self.params
    }

    pub fn select(&mut self, d: &Dataset, support: &[usize]) -> Vec<usize> {
        select_relabel_set(d, support, &self.params, &mut self.rng)
    }

    /// Select with the current model's support set, relabel the selection
    /// with the kinematic checker, then update the model.
    pub fn update_cycle(
        &mut self,
        model: &mut FastronModel,
        d: &mut Dataset,
        checker: &KinematicChecker,
    ) -> Result<CycleStats> {
        self.params.validate(d.len())?;
        check_dim(d.len(), model.len())?;

        let t0 = Instant::now();
        let r = self.select(d, model.support());
        let select_time = t0.elapsed();

        let queries_before = checker.stats().query_count();
        let t1 = Instant::now();
        let flips = relabel(checker, d, &r)?;
        let kcd_time = t1.elapsed();
        let kcd_queries = checker.stats().query_count() - queries_before;

        let t2 = Instant::now();
        let update = model.update(d)?;
        let update_time = t2.elapsed();

        Ok(CycleStats {
            relabeled: r.len(),
            flips,
            kcd_queries,
            update,
            select_time,
            kcd_time,
            update_time,
        })
    }
}
