use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::gp::Kernel;
use crate::planner::SearchConfig;
use crate::world::{PrimitiveSet, Rect, DEFAULT_BLOCK_SIDE, DEFAULT_PADDING, DEFAULT_SENSING_RADIUS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Convex,
    NonConvexKnown,
    NonConvexRevealed,
    Spatiotemporal,
    GridFile,
}

impl Scenario {
    pub fn has_obstacles(self) -> bool {
        matches!(self, Scenario::NonConvexKnown | Scenario::NonConvexRevealed)
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Convex => "convex",
            Scenario::NonConvexKnown => "non-convex-known",
            Scenario::NonConvexRevealed => "non-convex-revealed",
            Scenario::Spatiotemporal => "spatiotemporal",
            Scenario::GridFile => "grid-file",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlannerKind {
    Plumes,
    UcbMcts,
    UcbMyopic,
    Boustro,
}

impl PlannerKind {
    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Plumes => "plumes",
            PlannerKind::UcbMcts => "ucb-mcts",
            PlannerKind::UcbMyopic => "ucb-myopic",
            PlannerKind::Boustro => "boustro",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Plumes, Self::UcbMcts, Self::UcbMyopic, Self::Boustro]
            .into_iter()
            .find(|p| p.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub lengthscale: f64,
    pub variance: f64,
    pub noise_variance: f64,
    /// Required by the spatiotemporal scenario.
    pub temporal_lengthscale: Option<f64>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            lengthscale: 1.0,
            variance: 100.0,
            noise_variance: 1.0,
            temporal_lengthscale: None,
        }
    }
}

impl KernelConfig {
    pub fn kernel(&self) -> Kernel {
        match self.temporal_lengthscale {
            Some(lt) => Kernel::spatiotemporal(self.lengthscale, lt, self.variance),
            None => Kernel::squared_exponential(self.lengthscale, self.variance),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MviConfig {
    pub samples: usize,
    pub features: usize,
    pub restarts: usize,
}

impl Default for MviConfig {
    fn default() -> Self {
        Self {
            samples: 3,
            features: 1000,
            restarts: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UcbConfig {
    /// Discretization size `|X|` of the no-regret schedule.
    pub grid_size: f64,
    pub delta: f64,
    /// Replaces the schedule with a constant `β` when set.
    pub beta: Option<f64>,
}

impl Default for UcbConfig {
    fn default() -> Self {
        Self {
            grid_size: 1e4,
            delta: 0.01,
            beta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObstacleConfig {
    /// Rows `xmin,ymin,xmax,ymax`; when absent a `cols × rows` lattice of blocks is used.
    pub file: Option<PathBuf>,
    pub cols: usize,
    pub rows: usize,
    pub block_side: f64,
    pub padding: f64,
    pub sensing_radius: f64,
}

impl Default for ObstacleConfig {
    fn default() -> Self {
        Self {
            file: None,
            cols: 4,
            rows: 3,
            block_side: DEFAULT_BLOCK_SIDE,
            padding: DEFAULT_PADDING,
            sensing_radius: DEFAULT_SENSING_RADIUS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentConfig {
    /// Generation grid nodes per axis.
    pub grid_nodes: usize,
    /// Grid file for the grid-file scenario.
    pub file: Option<PathBuf>,
    /// Time frames of a generated spatiotemporal field.
    pub frames: usize,
    /// Planning iterations between consecutive frames.
    pub frame_interval: f64,
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        Self {
            grid_nodes: 51,
            file: None,
            frames: 15,
            frame_interval: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoustroConfig {
    pub row_spacing: f64,
}

impl Default for BoustroConfig {
    fn default() -> Self {
        Self { row_spacing: 0.5 }
    }
}

fn default_geofence() -> Rect {
    Rect::new(0.0, 0.0, 10.0, 10.0)
}

fn default_primitives() -> PrimitiveSet {
    PrimitiveSet::holonomic(10, 1.5, 0.5, false)
}

fn default_budget() -> f64 {
    200.0
}

fn default_epsilon() -> f64 {
    1.5
}

fn default_trials() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    /// The designated planner; others in `compare_with` run on the same environments.
    pub planner: PlannerKind,
    #[serde(default)]
    pub compare_with: Vec<PlannerKind>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_budget")]
    pub budget: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Planning iterations at which belief and reward snapshots are stored.
    #[serde(default)]
    pub snapshots: Vec<usize>,
    /// Start pose `[x, y, heading]`; defaults to the geofence centre facing +x.
    #[serde(default)]
    pub start: Option<[f64; 3]>,
    #[serde(default = "default_geofence")]
    pub geofence: Rect,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default = "default_primitives")]
    pub primitives: PrimitiveSet,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub mvi: MviConfig,
    #[serde(default)]
    pub ucb: UcbConfig,
    #[serde(default)]
    pub obstacles: ObstacleConfig,
    #[serde(default)]
    pub environment: EnvironmentConfig,
    #[serde(default)]
    pub boustro: BoustroConfig,
}

impl ExperimentConfig {
    /// Minimal configuration with every default filled in.
    pub fn new(scenario: Scenario, planner: PlannerKind) -> Self {
        Self {
            scenario,
            planner,
            compare_with: Vec::new(),
            trials: default_trials(),
            base_seed: 0,
            budget: default_budget(),
            epsilon: default_epsilon(),
            snapshots: Vec::new(),
            start: None,
            geofence: default_geofence(),
            kernel: KernelConfig::default(),
            primitives: default_primitives(),
            search: SearchConfig::default(),
            mvi: MviConfig::default(),
            ucb: UcbConfig::default(),
            obstacles: ObstacleConfig::default(),
            environment: EnvironmentConfig::default(),
            boustro: BoustroConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative data paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.environment.file, &mut cfg.obstacles.file].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Designated planner first, then the comparison planners without duplicates.
    pub fn planners(&self) -> Vec<PlannerKind> {
        let mut v = vec![self.planner];
        for p in &self.compare_with {
            if !v.contains(p) {
                v.push(*p);
            }
        }
        v
    }

    pub fn start_pose(&self) -> [f64; 3] {
        self.start.unwrap_or_else(|| {
            let c = self.geofence.center();
            [c[0], c[1], 0.0]
        })
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.base_seed.wrapping_add(trial as u64)
    }

    /// Planning steps a full mission can afford.
    pub fn mission_steps(&self) -> usize {
        (self.budget / self.primitives.length() + 1e-9).floor() as usize
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let err = |m: String| Err(HarnessError::Config(m));
        if self.trials == 0 {
            return err("trials must be at least 1".into());
        }
        if !(self.budget > 0.0) || !(self.epsilon > 0.0) {
            return err("budget and epsilon must be positive".into());
        }
        let k = &self.kernel;
        if !(k.lengthscale > 0.0 && k.variance > 0.0 && k.noise_variance > 0.0) {
            return err("kernel lengthscale, variance and noise variance must be positive".into());
        }
        match (self.scenario, k.temporal_lengthscale) {
            (Scenario::Spatiotemporal, None) => {
                return err("the spatiotemporal scenario needs kernel.temporal_lengthscale".into())
            }
            (Scenario::Spatiotemporal, Some(lt)) if !(lt > 0.0) => {
                return err("temporal lengthscale must be positive".into())
            }
            (s, Some(_)) if s != Scenario::Spatiotemporal => {
                return err("temporal_lengthscale is only valid for the spatiotemporal scenario".into())
            }
            _ => {}
        }
        if !self.geofence.is_valid() {
            return err("geofence is degenerate".into());
        }
        if !(self.primitives.length() > 0.0 && self.primitives.sample_spacing() > 0.0) || self.primitives.is_empty() {
            return err("primitive length, sample spacing and count must be positive".into());
        }
        let [x, y, _] = self.start_pose();
        // grid files define their own extent, checked once loaded
        if self.scenario != Scenario::GridFile && !self.geofence.contains(x, y) {
            return err("start pose is outside the geofence".into());
        }
        if self.scenario == Scenario::GridFile && self.environment.file.is_none() {
            return err("the grid-file scenario needs environment.file".into());
        }
        if self.scenario.has_obstacles() && self.planners().contains(&PlannerKind::Boustro) {
            return err("boustro is a coverage baseline and cannot be used with obstacles".into());
        }
        let o = &self.obstacles;
        if !(o.padding >= 0.0 && o.sensing_radius >= 0.0 && o.block_side > 0.0) {
            return err("obstacle padding, sensing radius and block side must be valid".into());
        }
        let env = &self.environment;
        if env.frames == 0 || !(env.frame_interval > 0.0) {
            return err("environment frames and frame interval must be positive".into());
        }
        if !(self.boustro.row_spacing > 0.0) {
            return err("boustro row spacing must be positive".into());
        }
        if self.mvi.samples == 0 || self.mvi.features == 0 || self.mvi.restarts == 0 {
            return err("mvi samples, features and restarts must be positive".into());
        }
        self.search.validate().map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Short stable digest of the fully-resolved configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(&Sha256::digest(canonical.as_bytes())[..8])
    }
}
