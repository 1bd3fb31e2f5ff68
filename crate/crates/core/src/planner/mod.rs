//! Action selection: continuous-observation MCTS and the baselines it is compared against.

mod boustrophedon;
mod mcts;
mod myopic;

use serde::{Deserialize, Serialize};

use crate::gp::GpError;
use crate::world::{feasible_actions, ActionPrimitive, ObstacleMap, Pose, PrimitiveSet};

pub use boustrophedon::{plan_boustrophedon, Polyline};
pub use mcts::{
    plan_mcts, plan_mcts_ml, puct_value, search, widen, DepthSchedule, ObservationModel, SearchConfig, SearchTree,
    Widen,
};
pub use myopic::plan_myopic;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("no feasible action from the current pose")]
    Trapped,
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Gp(#[from] GpError),
}

/// What a planner may ask of the world during search.
pub trait WorldInterface {
    fn feasible_actions(&self, pose: &Pose) -> Vec<ActionPrimitive>;

    /// Timestamp of samples taken by the action at tree depth `depth`; `None` for static fields.
    fn sample_time(&self, _depth: usize) -> Option<f64> {
        None
    }
}

/// Feasibility from an obstacle map and a primitive library.
#[derive(Debug, Clone, Copy)]
pub struct MapWorld<'a> {
    pub map: &'a ObstacleMap,
    pub primitives: &'a PrimitiveSet,
    /// Time of the next executed action; each tree level adds `time_step`.
    pub time: Option<f64>,
    pub time_step: f64,
}

impl<'a> MapWorld<'a> {
    pub fn new(map: &'a ObstacleMap, primitives: &'a PrimitiveSet) -> Self {
        Self {
            map,
            primitives,
            time: None,
            time_step: 1.0,
        }
    }

    pub fn at_time(mut self, time: f64) -> Self {
        self.time = Some(time);
        self
    }
}

impl WorldInterface for MapWorld<'_> {
    fn feasible_actions(&self, pose: &Pose) -> Vec<ActionPrimitive> {
        feasible_actions(pose, self.map, self.primitives)
    }

    fn sample_time(&self, depth: usize) -> Option<f64> {
        self.time.map(|t| t + depth as f64 * self.time_step)
    }
}

/// The same actions from every pose; useful for bandit-style problems.
#[derive(Debug, Clone)]
pub struct FixedActions(pub Vec<ActionPrimitive>);

impl WorldInterface for FixedActions {
    fn feasible_actions(&self, _pose: &Pose) -> Vec<ActionPrimitive> {
        self.0.clone()
    }
}

/// Root statistics of one candidate action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionStats {
    pub action_id: usize,
    pub visits: u64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerDecision {
    pub action: ActionPrimitive,
    pub root_stats: Vec<ActionStats>,
}

/// Index of the best child: most visits, then higher value, then lowest index.
pub(crate) fn most_visited(stats: &[ActionStats]) -> usize {
    let mut best = 0;
    for (i, s) in stats.iter().enumerate().skip(1) {
        let b = &stats[best];
        if s.visits > b.visits || (s.visits == b.visits && s.value > b.value) {
            best = i;
        }
    }
    best
}
