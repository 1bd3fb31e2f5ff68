//! Monte Carlo tree search over GP beliefs.
//!
//! The tree alternates belief nodes and belief-action nodes. Belief nodes pick
//! an action by PUCT; belief-action nodes grow belief children by progressive
//! widening, each child conditioned on one simulated observation draw at the
//! action's sample locations.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{most_visited, ActionStats, PlanError, PlannerDecision, WorldInterface};
use crate::acquisition::RewardFn;
use crate::gp::{GpBelief, Projection};
use crate::world::{ActionPrimitive, Pose};

/// Guard added before flooring `N^α` so exact integer powers do not round down.
const FLOOR_GUARD: f64 = 1e-9;

/// A per-depth exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DepthSchedule {
    /// `scale / (d + 1)`.
    Inverse { scale: f64 },
    Constant { value: f64 },
    /// One value per depth; the last repeats.
    Explicit { values: Vec<f64> },
}

impl DepthSchedule {
    pub fn at(&self, depth: usize) -> f64 {
        match self {
            DepthSchedule::Inverse { scale } => scale / (depth as f64 + 1.0),
            DepthSchedule::Constant { value } => *value,
            DepthSchedule::Explicit { values } => values[depth.min(values.len() - 1)],
        }
    }

    fn validate(&self, horizon: usize, name: &str) -> Result<(), PlanError> {
        if let DepthSchedule::Explicit { values } = self {
            if values.is_empty() {
                return Err(PlanError::InvalidConfig(format!("{name} schedule is empty")));
            }
        }
        for d in 0..horizon {
            let v = self.at(d);
            if !(v > 0.0 && v < 1.0) {
                return Err(PlanError::InvalidConfig(format!("{name} exponent {v} at depth {d} is outside (0, 1)")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub horizon: usize,
    pub rollouts: usize,
    #[serde(default = "default_discount")]
    pub discount: f64,
    /// Exploration exponent `e_d` of the PUCT bonus.
    #[serde(default = "default_schedule")]
    pub exploration: DepthSchedule,
    /// Widening exponent `α_d`.
    #[serde(default = "default_schedule")]
    pub widening: DepthSchedule,
    /// Seed of the search's observation sampler; the harness sets it per iteration.
    #[serde(skip)]
    pub seed: u64,
}

fn default_discount() -> f64 {
    0.9
}

fn default_schedule() -> DepthSchedule {
    DepthSchedule::Inverse { scale: 0.5 }
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            horizon: 5,
            rollouts: 250,
            discount: default_discount(),
            exploration: default_schedule(),
            widening: default_schedule(),
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        if self.horizon == 0 {
            return Err(PlanError::InvalidConfig("horizon must be at least 1".into()));
        }
        if self.rollouts == 0 {
            return Err(PlanError::InvalidConfig("rollout budget must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(PlanError::InvalidConfig(format!("discount {} is outside [0, 1]", self.discount)));
        }
        self.exploration.validate(self.horizon, "exploration")?;
        self.widening.validate(self.horizon, "widening")
    }
}

/// `Q̂ + √(N_parent^e / N_child)`, or `+∞` for an unvisited child.
pub fn puct_value(mean: f64, parent_visits: u64, child_visits: u64, exponent: f64) -> f64 {
    if child_visits == 0 {
        return f64::INFINITY;
    }
    mean + ((parent_visits as f64).powf(exponent) / child_visits as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Widen {
    Create,
    Revisit(usize),
}

/// Progressive-widening decision for a belief-action node visited for the `visits`-th time.
pub fn widen(visits: u64, alpha: f64, child_visits: &[u64]) -> Widen {
    let now = ((visits as f64).powf(alpha) + FLOOR_GUARD).floor();
    let before = (((visits - 1) as f64).powf(alpha) + FLOOR_GUARD).floor();
    if now > before || child_visits.is_empty() {
        return Widen::Create;
    }
    let mut best = 0;
    for (i, &n) in child_visits.iter().enumerate() {
        if n < child_visits[best] {
            best = i;
        }
    }
    Widen::Revisit(best)
}

/// How belief children of a belief-action node are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservationModel {
    /// Fresh posterior-predictive draws under progressive widening.
    Sampled,
    /// A single child that observes the posterior mean.
    MaximumLikelihood,
}

#[derive(Debug, Clone)]
struct BeliefNode {
    belief: GpBelief,
    pose: Pose,
    depth: usize,
    visits: u64,
    actions: Option<Vec<usize>>,
    observations: Vec<f64>,
}

#[derive(Debug, Clone)]
struct ActionNode {
    action: ActionPrimitive,
    depth: usize,
    visits: u64,
    value: f64,
    children: Vec<usize>,
    reward: Option<f64>,
    inputs: Vec<Vec<f64>>,
    projections: Option<Vec<Projection>>,
}

/// The search tree left behind by one planning call.
#[derive(Debug, Clone)]
pub struct SearchTree {
    beliefs: Vec<BeliefNode>,
    actions: Vec<ActionNode>,
    rollouts: usize,
}

impl SearchTree {
    pub fn belief_count(&self) -> usize {
        self.beliefs.len()
    }

    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    pub fn root_visits(&self) -> u64 {
        self.beliefs[0].visits
    }

    /// Visit counts of every belief-action node, with their depth and belief-child count.
    pub fn action_nodes(&self) -> impl Iterator<Item = (usize, u64, usize)> + '_ {
        self.actions.iter().map(|a| (a.depth, a.visits, a.children.len()))
    }

    /// Visit counts of every belief node with the visit counts of its action children.
    pub fn belief_nodes(&self) -> impl Iterator<Item = (usize, u64, Vec<u64>)> + '_ {
        self.beliefs.iter().map(|b| {
            let kids = b
                .actions
                .as_ref()
                .map(|a| a.iter().map(|&i| self.actions[i].visits).collect())
                .unwrap_or_default();
            (b.depth, b.visits, kids)
        })
    }

    /// Pose of every belief node, weighted by its visit count.
    pub fn visited_poses(&self) -> impl Iterator<Item = (Pose, u64)> + '_ {
        self.beliefs.iter().map(|b| (b.pose, b.visits))
    }

    /// Structural violations: visit conservation at belief nodes, the widening bound
    /// `⌈N^{α_d}⌉` at belief-action nodes, and a root visited once per rollout.
    pub fn violations(&self, widening: &DepthSchedule) -> Vec<String> {
        let mut out = Vec::new();
        if self.beliefs[0].visits != self.rollouts as u64 {
            out.push(format!("root visits {} != rollouts {}", self.beliefs[0].visits, self.rollouts));
        }
        for (i, b) in self.beliefs.iter().enumerate() {
            // leaves and trapped nodes end the rollout without choosing an action
            let Some(actions) = b.actions.as_ref().filter(|a| !a.is_empty()) else {
                continue;
            };
            let sum: u64 = actions.iter().map(|&k| self.actions[k].visits).sum();
            if sum != b.visits {
                out.push(format!("belief node {i}: N = {} but children sum to {sum}", b.visits));
            }
        }
        for (i, a) in self.actions.iter().enumerate() {
            let bound = ((a.visits as f64).powf(widening.at(a.depth)) - FLOOR_GUARD).ceil() as usize;
            if a.children.len() > bound {
                out.push(format!(
                    "action node {i}: {} children exceed ⌈{}^α⌉ = {bound}",
                    a.children.len(),
                    a.visits
                ));
            }
            let child_sum: u64 = a.children.iter().map(|&c| self.beliefs[c].visits).sum();
            if !a.children.is_empty() && child_sum != a.visits {
                out.push(format!("action node {i}: children visited {child_sum} times, node {}", a.visits));
            }
        }
        out
    }
}

struct Search<'a, W: ?Sized, R: ?Sized> {
    world: &'a W,
    reward: &'a R,
    config: &'a SearchConfig,
    model: ObservationModel,
    tree: SearchTree,
    root_cache: HashMap<Vec<u64>, Projection>,
    rng: ChaCha8Rng,
}

impl<W: WorldInterface + ?Sized, R: RewardFn + ?Sized> Search<'_, W, R> {
    fn expand(&mut self, b: usize) -> Vec<usize> {
        if let Some(a) = &self.tree.beliefs[b].actions {
            return a.clone();
        }
        let node = &self.tree.beliefs[b];
        let depth = node.depth;
        let time = self.world.sample_time(depth);
        let ids: Vec<usize> = self
            .world
            .feasible_actions(&node.pose)
            .into_iter()
            .map(|action| {
                let inputs = action.sample_inputs(time);
                self.tree.actions.push(ActionNode {
                    action,
                    depth,
                    visits: 0,
                    value: 0.0,
                    children: Vec::new(),
                    reward: None,
                    inputs,
                    projections: None,
                });
                self.tree.actions.len() - 1
            })
            .collect();
        self.tree.beliefs[b].actions = Some(ids.clone());
        ids
    }

    fn select(&self, b: usize, ids: &[usize]) -> usize {
        let node = &self.tree.beliefs[b];
        let e = self.config.exploration.at(node.depth);
        let mut best = ids[0];
        let mut best_v = f64::NEG_INFINITY;
        for &a in ids {
            let an = &self.tree.actions[a];
            let v = puct_value(an.value, node.visits, an.visits, e);
            if v > best_v {
                best = a;
                best_v = v;
            }
        }
        best
    }

    /// Projections of the action's sample inputs against its parent belief, via the root cache.
    fn projections(&mut self, b: usize, a: usize) -> Result<Vec<Projection>, PlanError> {
        if let Some(p) = &self.tree.actions[a].projections {
            return Ok(p.clone());
        }
        let root = &self.tree.beliefs[0].belief;
        let belief = &self.tree.beliefs[b].belief;
        let mut out = Vec::with_capacity(self.tree.actions[a].inputs.len());
        for x in &self.tree.actions[a].inputs {
            let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
            let base = match self.root_cache.get(&key) {
                Some(p) => p.clone(),
                None => {
                    let p = root.project(x)?;
                    self.root_cache.insert(key, p.clone());
                    p
                }
            };
            out.push(if b == 0 { base } else { belief.extend_projection(&base)? });
        }
        self.tree.actions[a].projections = Some(out.clone());
        Ok(out)
    }

    fn action_reward(&mut self, b: usize, a: usize, projections: &[Projection]) -> Result<f64, PlanError> {
        if let Some(r) = self.tree.actions[a].reward {
            return Ok(r);
        }
        let belief = &self.tree.beliefs[b].belief;
        let mut total = 0.0;
        for (x, p) in self.tree.actions[a].inputs.iter().zip(projections) {
            total += self.reward.point_reward(x, belief.posterior_projected(p)?);
        }
        self.tree.actions[a].reward = Some(total);
        Ok(total)
    }

    fn new_child(&mut self, b: usize, a: usize, projections: &[Projection]) -> Result<usize, PlanError> {
        let parent = &self.tree.beliefs[b];
        let obs = match self.model {
            ObservationModel::Sampled => parent.belief.sample_joint_projected(projections, &mut self.rng)?,
            ObservationModel::MaximumLikelihood => projections
                .iter()
                .map(|p| parent.belief.posterior_projected(p).map(|q| q.mean))
                .collect::<Result<_, _>>()?,
        };
        let belief = parent.belief.condition_projected(projections, &obs)?;
        let depth = parent.depth + 1;
        let pose = self.tree.actions[a].action.terminal();
        self.tree.beliefs.push(BeliefNode {
            belief,
            pose,
            depth,
            visits: 0,
            actions: None,
            observations: obs,
        });
        let id = self.tree.beliefs.len() - 1;
        self.tree.actions[a].children.push(id);
        Ok(id)
    }

    /// One rollout from belief node `b`; returns the discounted return.
    fn rollout(&mut self, b: usize) -> Result<f64, PlanError> {
        // every arrival counts, so leaf children are balanced by widening revisits
        self.tree.beliefs[b].visits += 1;
        let depth = self.tree.beliefs[b].depth;
        if depth >= self.config.horizon {
            return Ok(0.0);
        }
        let ids = self.expand(b);
        if ids.is_empty() {
            return Ok(0.0);
        }
        let a = self.select(b, &ids);
        self.tree.actions[a].visits += 1;
        let projections = self.projections(b, a)?;
        let uses_obs = self.reward.uses_observations();
        let last = depth + 1 == self.config.horizon;

        let mut child = None;
        if !last || uses_obs {
            let visits = self.tree.actions[a].visits;
            let decision = match self.model {
                ObservationModel::MaximumLikelihood if !self.tree.actions[a].children.is_empty() => Widen::Revisit(0),
                ObservationModel::MaximumLikelihood => Widen::Create,
                ObservationModel::Sampled => {
                    let kids: Vec<u64> = self.tree.actions[a]
                        .children
                        .iter()
                        .map(|&c| self.tree.beliefs[c].visits)
                        .collect();
                    widen(visits, self.config.widening.at(depth), &kids)
                }
            };
            child = Some(match decision {
                Widen::Create => self.new_child(b, a, &projections)?,
                Widen::Revisit(i) => self.tree.actions[a].children[i],
            });
        }

        let r = match (uses_obs, child) {
            (true, Some(c)) => self
                .reward
                .observation_reward(&self.tree.actions[a].inputs, &self.tree.beliefs[c].observations),
            _ => self.action_reward(b, a, &projections)?,
        };
        let future = match child {
            Some(c) => self.rollout(c)?,
            None => 0.0,
        };
        let g = r + self.config.discount * future;
        let node = &mut self.tree.actions[a];
        node.value += (g - node.value) / node.visits as f64;
        Ok(g)
    }
}

/// Runs a full search and returns the decision together with the tree.
pub fn search<W: WorldInterface + ?Sized, R: RewardFn + ?Sized>(
    belief: &GpBelief,
    pose: &Pose,
    world: &W,
    reward: &R,
    config: &SearchConfig,
    model: ObservationModel,
) -> Result<(PlannerDecision, SearchTree), PlanError> {
    config.validate()?;
    let mut s = Search {
        world,
        reward,
        config,
        model,
        tree: SearchTree {
            beliefs: vec![BeliefNode {
                belief: belief.clone(),
                pose: *pose,
                depth: 0,
                visits: 0,
                actions: None,
                observations: Vec::new(),
            }],
            actions: Vec::new(),
            rollouts: config.rollouts,
        },
        root_cache: HashMap::new(),
        rng: ChaCha8Rng::seed_from_u64(config.seed),
    };
    let root_actions = s.expand(0);
    if root_actions.is_empty() {
        return Err(PlanError::Trapped);
    }
    if config.rollouts < root_actions.len() {
        return Err(PlanError::InvalidConfig(format!(
            "rollout budget {} is below the {} root actions",
            config.rollouts,
            root_actions.len()
        )));
    }
    for _ in 0..config.rollouts {
        s.rollout(0)?;
    }
    let tree = s.tree;
    let root_stats: Vec<ActionStats> = root_actions
        .iter()
        .map(|&a| {
            let n = &tree.actions[a];
            ActionStats {
                action_id: n.action.id,
                visits: n.visits,
                value: n.value,
            }
        })
        .collect();
    let best = most_visited(&root_stats);
    let action = tree.actions[root_actions[best]].action.clone();
    Ok((PlannerDecision { action, root_stats }, tree))
}

/// Continuous-observation MCTS with progressive widening.
pub fn plan_mcts<W: WorldInterface + ?Sized, R: RewardFn + ?Sized>(
    belief: &GpBelief,
    pose: &Pose,
    world: &W,
    reward: &R,
    config: &SearchConfig,
) -> Result<PlannerDecision, PlanError> {
    search(belief, pose, world, reward, config, ObservationModel::Sampled).map(|(d, _)| d)
}

/// MCTS where every action has one child observing the posterior mean.
pub fn plan_mcts_ml<W: WorldInterface + ?Sized, R: RewardFn + ?Sized>(
    belief: &GpBelief,
    pose: &Pose,
    world: &W,
    reward: &R,
    config: &SearchConfig,
) -> Result<PlannerDecision, PlanError> {
    search(belief, pose, world, reward, config, ObservationModel::MaximumLikelihood).map(|(d, _)| d)
}
