use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, PlannerKind, Scenario};
use super::HarnessError;
use crate::acquisition::{
    action_reward, refresh_max_values, ucb_from_moments, MaxValueSet, Mvi, RewardFn, Ucb, UcbSchedule,
};
use crate::gp::{GpBelief, SearchDomain};
use crate::metrics::{
    mss_reward_tracking, rmse, xstar_error, EnvironmentMeta, MetricReport, MissionStatus, Snapshot,
    StepEntry, TrialRecord,
};
use crate::planner::{plan_boustrophedon, plan_myopic, search, MapWorld, ObservationModel, PlanError, Polyline};
use crate::world::{
    generate_environment, load_environment, load_obstacles, observe, ActionPrimitive, GridSpec, GroundTruthField,
    KnowledgeMode, ObstacleMap, Pose, Rect,
};

/// Independent random streams of one trial.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub enum SeedRole {
    Environment = 1,
    Noise = 2,
    MaxValues = 3,
    Search = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one random stream, mixed from the trial seed, its role and the planning iteration.
pub fn derive_seed(trial_seed: u64, role: SeedRole, iteration: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(trial_seed) ^ role as u64) ^ iteration as u64)
}

/// Ground truth and obstacle map of one trial, shared by every planner that runs it.
#[derive(Debug, Clone)]
pub struct TrialWorld {
    pub field: GroundTruthField,
    pub map: ObstacleMap,
    pub seed: u64,
}

/// Builds the trial's environment from the config; depends only on the trial seed.
pub fn build_world(config: &ExperimentConfig, trial: usize) -> Result<TrialWorld, HarnessError> {
    let seed = config.trial_seed(trial);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, SeedRole::Environment, 0));
    let oc = &config.obstacles;
    let obstacles = if config.scenario.has_obstacles() {
        match &oc.file {
            Some(path) => load_obstacles(path)?,
            None => ObstacleMap::lattice_blocks(&config.geofence, oc.cols, oc.rows, oc.block_side),
        }
    } else {
        Vec::new()
    };
    let field = match config.scenario {
        Scenario::GridFile => {
            let path = config.environment.file.as_ref().expect("validated");
            load_environment(path)?
        }
        scenario => {
            let n = config.environment.grid_nodes;
            let mut grid = GridSpec::square(n);
            if scenario == Scenario::Spatiotemporal {
                grid = grid.with_frames(config.environment.frames, config.environment.frame_interval);
            }
            generate_environment(&config.kernel.kernel(), &config.geofence, grid, &obstacles, &mut rng)?
        }
    };
    let geofence = if config.scenario == Scenario::GridFile { field.bounds() } else { config.geofence };
    let mode = if config.scenario == Scenario::NonConvexRevealed { KnowledgeMode::Revealed } else { KnowledgeMode::Known };
    let map = ObstacleMap::new(geofence, obstacles, oc.padding, mode, oc.sensing_radius)?;
    Ok(TrialWorld { field, map, seed })
}

pub fn run_trial(config: &ExperimentConfig, planner: PlannerKind, trial: usize) -> Result<TrialRecord, HarnessError> {
    let world = build_world(config, trial)?;
    run_trial_with_world(config, planner, world, trial)
}

/// The heuristic that drove one planning iteration.
enum ActiveReward {
    Mvi(MaxValueSet),
    Ucb(Ucb),
    None,
}

impl ActiveReward {
    fn at(&self, mean: f64, variance: f64) -> f64 {
        match self {
            ActiveReward::Mvi(m) => m.reward(mean, variance),
            ActiveReward::Ucb(u) => ucb_from_moments(mean, variance, u.beta),
            ActiveReward::None => 0.0,
        }
    }
}

struct Mission<'a> {
    config: &'a ExperimentConfig,
    planner: PlannerKind,
    field: GroundTruthField,
    map: ObstacleMap,
    seed: u64,
    belief: GpBelief,
    pose: Pose,
    noise_rng: ChaCha8Rng,
    entries: Vec<StepEntry>,
    max_values: Vec<Vec<f64>>,
    snapshots: Vec<Snapshot>,
    wall_time: Vec<f64>,
    path_length: f64,
}

impl Mission<'_> {
    fn dynamic(&self) -> bool {
        self.config.scenario == Scenario::Spatiotemporal
    }

    fn time(&self, t: usize) -> Option<f64> {
        self.dynamic().then_some(t as f64)
    }

    fn inputs(&self, samples: &[[f64; 2]], t: usize) -> Vec<Vec<f64>> {
        samples
            .iter()
            .map(|p| match self.time(t) {
                Some(time) => vec![p[0], p[1], time],
                None => vec![p[0], p[1]],
            })
            .collect()
    }

    /// Observes at `samples` at iteration `t`, conditions the belief and logs the step.
    fn execute(
        &mut self,
        t: usize,
        samples: &[[f64; 2]],
        end: Pose,
        distance: f64,
        action_id: Option<usize>,
        heuristic_reward: f64,
    ) -> Result<(), HarnessError> {
        let batch = observe(&self.field, samples, t as f64, self.config.kernel.noise_variance, &mut self.noise_rng);
        self.belief = self.belief.condition(&self.inputs(samples, t), &batch.values)?;
        self.pose = end;
        self.path_length += distance;
        self.map.reveal_obstacles(&self.pose);
        self.entries.push(StepEntry {
            step: t,
            pose: end,
            action_id,
            samples: batch.locations,
            times: batch.timestamps,
            observations: batch.values,
            heuristic_reward,
            path_length: self.path_length,
        });
        Ok(())
    }

    fn snapshot(&mut self, t: usize, reward: &ActiveReward, tree_visits: Vec<([f64; 2], u64)>) -> Result<(), HarnessError> {
        if !self.config.snapshots.contains(&t) {
            return Ok(());
        }
        let inputs: Vec<Vec<f64>> = (0..self.field.nx() * self.field.ny())
            .map(|i| self.field.node_position(i))
            .map(|p| self.inputs(&[p], t).remove(0))
            .collect();
        let post = self.belief.posterior(&inputs)?;
        self.snapshots.push(Snapshot {
            iteration: t,
            mean: post.iter().map(|p| p.mean).collect(),
            variance: post.iter().map(|p| p.variance).collect(),
            reward: post.iter().map(|p| reward.at(p.mean, p.variance)).collect(),
            tree_visits,
        });
        Ok(())
    }

    fn max_value_domain(&self, t: usize) -> SearchDomain {
        let g = self.map.geofence;
        let holes = self
            .map
            .known_obstacles()
            .map(|o| (vec![o.xmin, o.ymin], vec![o.xmax, o.ymax]))
            .collect();
        let d = SearchDomain::new(vec![g.xmin, g.ymin], vec![g.xmax, g.ymax]).with_holes(holes);
        match self.time(t) {
            Some(time) => d.with_fixed(vec![time]),
            None => d,
        }
    }

    /// One adaptive planning iteration; `Ok(false)` when the vehicle is trapped.
    fn plan_step(&mut self, t: usize) -> Result<bool, HarnessError> {
        let cfg = self.config;
        let reward = match self.planner {
            PlannerKind::Plumes => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, SeedRole::MaxValues, t));
                let m = refresh_max_values(
                    &self.belief,
                    cfg.mvi.samples,
                    cfg.mvi.features,
                    &self.max_value_domain(t),
                    cfg.mvi.restarts,
                    t,
                    &mut rng,
                )?;
                self.max_values.push(m.values.clone());
                ActiveReward::Mvi(m)
            }
            PlannerKind::UcbMcts | PlannerKind::UcbMyopic => {
                let schedule = match cfg.ucb.beta {
                    Some(b) => UcbSchedule::Constant(b),
                    None => UcbSchedule::NoRegret {
                        grid_size: cfg.ucb.grid_size,
                        delta: cfg.ucb.delta,
                    },
                };
                ActiveReward::Ucb(Ucb::at_iteration(&schedule, t))
            }
            PlannerKind::Boustro => unreachable!("boustro does not plan"),
        };
        let mvi;
        let ucb;
        let reward_fn: &dyn RewardFn = match &reward {
            ActiveReward::Mvi(m) => {
                mvi = Mvi(m);
                &mvi
            }
            ActiveReward::Ucb(u) => {
                ucb = *u;
                &ucb
            }
            ActiveReward::None => unreachable!(),
        };
        let mut world = MapWorld::new(&self.map, &cfg.primitives);
        if let Some(time) = self.time(t) {
            world = world.at_time(time);
        }
        let mut search_cfg = cfg.search.clone();
        search_cfg.seed = derive_seed(self.seed, SeedRole::Search, t);
        let outcome = match self.planner {
            PlannerKind::UcbMyopic => plan_myopic(&self.belief, &self.pose, &world, reward_fn).map(|d| (d, None)),
            kind => {
                let model = if kind == PlannerKind::Plumes {
                    ObservationModel::Sampled
                } else {
                    ObservationModel::MaximumLikelihood
                };
                search(&self.belief, &self.pose, &world, reward_fn, &search_cfg, model).map(|(d, tree)| (d, Some(tree)))
            }
        };
        let (decision, tree) = match outcome {
            Ok(v) => v,
            Err(PlanError::Trapped) => return Ok(false),
            Err(e) => return Err(e.into()),
        };
        let visits = tree
            .map(|tr| tr.visited_poses().map(|(p, n)| (p.position(), n)).collect())
            .unwrap_or_default();
        self.snapshot(t, &reward, visits)?;
        let action: ActionPrimitive = decision.action;
        let r = action_reward(&self.belief, &action, self.time(t), reward_fn)?;
        self.execute(t, action.samples(), action.terminal(), action.length, Some(action.id), r)?;
        Ok(true)
    }

    /// Walks the lawnmower path one primitive length per iteration; `Ok(false)` at its end.
    fn coverage_step(&mut self, t: usize, path: &Polyline) -> Result<bool, HarnessError> {
        let step = self.config.primitives.length();
        let spacing = self.config.primitives.sample_spacing();
        let total = path.length();
        let s0 = (t - 1) as f64 * step;
        if s0 >= total - 1e-9 {
            return Ok(false);
        }
        let s1 = (t as f64 * step).min(total);
        let mut samples = Vec::new();
        let mut k = 1;
        while s0 + k as f64 * spacing < s1 - 1e-9 {
            samples.push(path.point_at(s0 + k as f64 * spacing));
            k += 1;
        }
        let end = path.point_at(s1);
        samples.push(end);
        let before = path.point_at((s1 - 1e-6).max(0.0));
        let heading = (end[1] - before[1]).atan2(end[0] - before[0]);
        self.snapshot(t, &ActiveReward::None, Vec::new())?;
        self.execute(t, &samples, Pose::new(end[0], end[1], heading), s1 - s0, None, 0.0)?;
        Ok(true)
    }
}

/// Runs one mission of `planner` in a prepared world.
pub fn run_trial_with_world(
    config: &ExperimentConfig,
    planner: PlannerKind,
    world: TrialWorld,
    trial: usize,
) -> Result<TrialRecord, HarnessError> {
    config.validate()?;
    let TrialWorld { field, map, seed } = world;
    let dynamic = config.scenario == Scenario::Spatiotemporal;
    let kernel = config.kernel.kernel();
    let belief = GpBelief::new(kernel, config.kernel.noise_variance, if dynamic { 3 } else { 2 })?;
    let path = (planner == PlannerKind::Boustro).then(|| plan_boustrophedon(&map.geofence, config.boustro.row_spacing));
    let start = match (&path, config.start) {
        (Some(p), _) => {
            let [x, y] = p.point_at(0.0);
            Pose::new(x, y, 0.0)
        }
        (None, Some([x, y, h])) => Pose::new(x, y, h),
        (None, None) => {
            let c = map.geofence.center();
            Pose::new(c[0], c[1], 0.0)
        }
    };
    if !map.is_free_in_truth(start.x, start.y) {
        return Err(HarnessError::Config("start pose is not free".into()));
    }
    let mut m = Mission {
        config,
        planner,
        field,
        map,
        seed,
        belief,
        pose: start,
        noise_rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, SeedRole::Noise, 0)),
        entries: Vec::new(),
        max_values: Vec::new(),
        snapshots: Vec::new(),
        wall_time: Vec::new(),
        path_length: 0.0,
    };
    let clock = Instant::now();
    m.execute(0, &[start.position()], start, 0.0, None, 0.0)?;
    m.wall_time.push(clock.elapsed().as_secs_f64());

    let mut status = MissionStatus::BudgetExhausted;
    for t in 1..=config.mission_steps() {
        let clock = Instant::now();
        let moved = match &path {
            Some(p) => m.coverage_step(t, p)?,
            None => m.plan_step(t)?,
        };
        if !moved {
            status = match path {
                Some(_) => MissionStatus::PathExhausted,
                None => MissionStatus::Trapped { step: t },
            };
            break;
        }
        m.wall_time.push(clock.elapsed().as_secs_f64());
    }

    let last_t = m.entries.last().map_or(0, |e| e.step);
    let time = m.time(last_t);
    let final_time = last_t as f64;
    let obstacles: Vec<Rect> = m.map.obstacles().to_vec();
    let environment = EnvironmentMeta::from_field(&m.field, seed, final_time, &obstacles);
    let post_inputs: Vec<Vec<f64>> = (0..m.field.nx() * m.field.ny())
        .map(|i| m.inputs(&[m.field.node_position(i)], last_t).remove(0))
        .collect();
    let final_post = m.belief.posterior(&post_inputs)?;
    let mut record = TrialRecord {
        trial,
        seed,
        planner: planner.name().to_string(),
        scenario: config.scenario.name().to_string(),
        config_hash: config.hash(),
        status,
        entries: m.entries,
        max_values: m.max_values,
        environment,
        final_mean: final_post.iter().map(|p| p.mean).collect(),
        final_variance: final_post.iter().map(|p| p.variance).collect(),
        snapshots: m.snapshots,
        metrics: MetricReport {
            mss_reward: 0,
            rmse: rmse(&m.belief, &m.field, time)?,
            xstar_error: xstar_error(&m.belief, &m.field, m.field.xstar(final_time), time)?,
        },
        wall_time: m.wall_time,
    };
    record.metrics.mss_reward = mss_reward_tracking(&record, config.epsilon);
    Ok(record)
}
