//! Scenario generation, moving obstacles, metrics, and the benchmark drivers
//! behind the CLI.
//!
//! Every random choice derives from the scenario seed, so the same spec gives
//! the same scenes, datasets, selections and evaluation sets. Timing columns
//! are the only nondeterministic output; `record_timing = false` zeroes them.

mod config;
mod metrics;
mod runs;
mod scene;

pub use config::{parse_config, KEYS as CONFIG_KEYS};
pub use metrics::{evaluate, evaluate_with, spearman, Confusion, Metrics};
pub use runs::{
    label_dump, path_validity, run_dynamic_bench, run_dynamic_sweep, run_rrt_bench, run_static_bench,
    write_csv, write_label_csv, CycleRow, DynamicReport, DynamicSummary, LabelRow, RrtReport, RrtRow,
    RrtSummary, StaticRow,
};
pub use scene::{generate_obstacles, Scene};

use crate::active_learning::ActiveLearningParams;
use crate::dataset::{JointBounds, SamplerKind, SamplerSpec};
use crate::error::{Error, Result};
use crate::fastron::DEFAULT_MAX_UPDATES;
use crate::geometry::{ArmModel, Vec2};
use crate::planner::RrtParams;

#[derive(Debug, Clone, PartialEq)]
pub struct ArmSpec {
    pub link_lengths: Vec<f64>,
    /// Defaults to a fixed fraction of the total length.
    pub link_thickness: Option<f64>,
    pub base: Vec2,
}

impl ArmSpec {
    /// `dof` links sharing a total length of 2.
    pub fn equal_links(dof: usize) -> Self {
        Self {
            link_lengths: vec![2.0 / dof.max(1) as f64; dof],
            link_thickness: None,
            base: Vec2::ZERO,
        }
    }

    pub fn build(&self) -> Result<ArmModel> {
        match self.link_thickness {
            Some(t) => ArmModel::new(self.link_lengths.clone(), t, self.base),
            None => ArmModel::with_default_thickness(self.link_lengths.clone(), self.base),
        }
    }
}

impl Default for ArmSpec {
    fn default() -> Self {
        Self::equal_links(2)
    }
}

/// Random convex obstacles. Distances are fractions of the arm's reach,
/// measured from the base to the obstacle center; radii are absolute.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleSpec {
    pub count: usize,
    pub radius: (f64, f64),
    pub vertices: (usize, usize),
    pub distance: (f64, f64),
}

impl Default for ObstacleSpec {
    fn default() -> Self {
        Self {
            count: 1,
            radius: (0.2, 0.4),
            vertices: (8, 16),
            distance: (0.4, 0.9),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Motion {
    Static,
    /// Constant speed in a random direction per obstacle, reflecting off the
    /// workspace bounds. `None` means 2% of the workspace width per cycle.
    LinearBounce {
        speed: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub arm: ArmSpec,
    /// Defaults to 1.25 times the reach, centered on the base.
    pub workspace_half_width: Option<f64>,
    pub obstacles: ObstacleSpec,
    pub motion: Motion,
    pub cycles: usize,
    pub sampler: SamplerSpec,
    pub gamma: f64,
    pub r_plus: f64,
    pub max_updates: usize,
    /// Absolute allowance; overrides `allowance_fraction` when set.
    pub allowance: Option<usize>,
    pub allowance_fraction: f64,
    pub exploit_proportion: f64,
    pub k_ns: usize,
    /// Fresh configurations per evaluation.
    pub eval_size: usize,
    pub scenes: usize,
    pub seed: u64,
    pub rrt: RrtParams,
    pub replans: usize,
    pub placement_retries: usize,
    /// Obstacle counts for the static bench.
    pub sweep_obstacles: Vec<usize>,
    pub sweep_n: Vec<usize>,
    pub sweep_allowance_fraction: Vec<f64>,
    pub record_timing: bool,
}

impl ScenarioSpec {
    /// Defaults for an arm with `dof` equal links: a 625-point lattice up to
    /// two joints, 4000 uniform samples above.
    pub fn for_dof(dof: usize) -> Self {
        let (kind, n, r_plus) = if dof <= 2 {
            (SamplerKind::Grid, 625, 100.0)
        } else {
            (SamplerKind::Uniform, 4000, 2.0)
        };
        Self {
            arm: ArmSpec::equal_links(dof),
            workspace_half_width: None,
            obstacles: ObstacleSpec::default(),
            motion: Motion::LinearBounce { speed: None },
            cycles: 100,
            sampler: SamplerSpec {
                kind,
                n,
                dof,
                seed: 0,
            },
            gamma: 10.0,
            r_plus,
            max_updates: DEFAULT_MAX_UPDATES,
            allowance: None,
            allowance_fraction: 0.3,
            exploit_proportion: 0.8,
            k_ns: 4,
            eval_size: 10_000,
            scenes: 20,
            seed: 0,
            rrt: RrtParams::default(),
            replans: 5,
            placement_retries: 200,
            sweep_obstacles: vec![1, 2, 3, 4, 5],
            sweep_n: vec![625, 1225, 2500],
            sweep_allowance_fraction: vec![0.1, 0.3, 0.5],
            record_timing: true,
        }
    }

    pub fn dof(&self) -> usize {
        self.arm.link_lengths.len()
    }

    pub fn bounds(&self) -> JointBounds {
        JointBounds::symmetric(self.dof())
    }

    /// `round(fraction * N)` unless an absolute allowance was given.
    pub fn resolved_allowance(&self) -> usize {
        self.allowance
            .unwrap_or_else(|| (self.allowance_fraction * self.sampler.n as f64).round() as usize)
    }

    pub fn learning_params(&self, seed: u64) -> ActiveLearningParams {
        ActiveLearningParams {
            allowance: self.resolved_allowance(),
            exploit_proportion: self.exploit_proportion,
            k_ns: self.k_ns,
            seed,
        }
    }

    pub fn workspace_half_width(&self, arm: &ArmModel) -> f64 {
        self.workspace_half_width.unwrap_or(1.25 * arm.reach())
    }

    /// Speed in workspace units per cycle, or zero when static.
    pub fn speed(&self, arm: &ArmModel) -> f64 {
        match self.motion {
            Motion::Static => 0.0,
            Motion::LinearBounce { speed: Some(s) } => s,
            Motion::LinearBounce { speed: None } => 0.02 * 2.0 * self.workspace_half_width(arm),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        self.arm.build()?;
        if self.sampler.kind == SamplerKind::Grid
            && crate::dataset::grid_side(self.sampler.n, self.dof()).is_none()
        {
            return bad(format!(
                "grid sampling needs n = m^dof, got n = {} for dof {}",
                self.sampler.n,
                self.dof()
            ));
        }
        if self.sampler.n == 0 {
            return bad("n must be positive".into());
        }
        if !(self.gamma > 0.0) || !(self.r_plus >= 1.0) || self.max_updates == 0 {
            return bad("need gamma > 0, r_plus >= 1, max_updates > 0".into());
        }
        self.learning_params(0).validate(self.sampler.n)?;
        if !(0.0..=1.0).contains(&self.allowance_fraction) {
            return bad("allowance_fraction must be in [0, 1]".into());
        }
        let o = &self.obstacles;
        if !(0.0 < o.radius.0 && o.radius.0 <= o.radius.1) {
            return bad("obstacle radii need 0 < min <= max".into());
        }
        if !(3 <= o.vertices.0 && o.vertices.0 <= o.vertices.1) {
            return bad("obstacle vertex counts need 3 <= min <= max".into());
        }
        if !(0.0 <= o.distance.0 && o.distance.0 <= o.distance.1) {
            return bad("obstacle distances need 0 <= min <= max".into());
        }
        if let Some(h) = self.workspace_half_width {
            if !(h > 0.0) {
                return bad("workspace_half_width must be positive".into());
            }
        }
        if let Motion::LinearBounce { speed: Some(s) } = self.motion {
            if !(s >= 0.0) || !s.is_finite() {
                return bad("speed must be a non-negative number".into());
            }
        }
        if self.eval_size == 0 || self.scenes == 0 {
            return bad("eval_size and scenes must be positive".into());
        }
        if self
            .sweep_allowance_fraction
            .iter()
            .any(|f| !(0.0..=1.0).contains(f))
        {
            return bad("sweep_allowance_fraction entries must be in [0, 1]".into());
        }
        self.rrt.validate()
    }

    /// Sampler spec with its seed replaced.
    pub fn sampler_for(&self, seed: u64) -> SamplerSpec {
        SamplerSpec {
            dof: self.dof(),
            seed,
            ..self.sampler.clone()
        }
    }
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self::for_dof(2)
    }
}

/// Independent seed for one (purpose, index) pair, via SplitMix64 mixing.
pub fn derive_seed(seed: u64, purpose: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(seed) ^ purpose) ^ index)
}
