use serde::{Deserialize, Serialize};

use super::MetricReport;
use crate::world::{FieldSource, GroundTruthField, Pose, Rect};

/// One executed step of a mission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepEntry {
    pub step: usize,
    /// Vehicle pose after the step.
    pub pose: Pose,
    /// `None` for the initial in-place sampling and for pre-planned paths.
    pub action_id: Option<usize>,
    pub samples: Vec<[f64; 2]>,
    pub times: Vec<f64>,
    pub observations: Vec<f64>,
    /// Heuristic reward the planner assigned to the executed action.
    pub heuristic_reward: f64,
    /// Cumulative travelled distance after the step.
    pub path_length: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MissionStatus {
    BudgetExhausted,
    Trapped { step: usize },
    PathExhausted,
}

/// Ground-truth facts needed to score a mission after the fact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentMeta {
    pub seed: u64,
    pub source: FieldSource,
    pub nx: usize,
    pub ny: usize,
    pub origin: [f64; 2],
    pub cell: [f64; 2],
    pub frame_times: Vec<f64>,
    pub xstar: Vec<[f64; 2]>,
    pub fstar: Vec<f64>,
    /// Truth on the grid at the frame active when the mission ended.
    pub truth: Vec<f64>,
    pub obstacles: Vec<Rect>,
}

impl EnvironmentMeta {
    pub fn from_field(field: &GroundTruthField, seed: u64, final_time: f64, obstacles: &[Rect]) -> Self {
        let b = field.bounds();
        let frame_times = field.frame_times().to_vec();
        Self {
            seed,
            source: field.source,
            nx: field.nx(),
            ny: field.ny(),
            origin: [b.xmin, b.ymin],
            cell: field.cell_size(),
            xstar: frame_times.iter().map(|&t| field.xstar(t)).collect(),
            fstar: frame_times.iter().map(|&t| field.fstar(t)).collect(),
            frame_times,
            truth: field.frame_values(field.frame_index(final_time)).to_vec(),
            obstacles: obstacles.to_vec(),
        }
    }

    pub fn frame_index(&self, t: f64) -> usize {
        self.frame_times.partition_point(|&ft| ft <= t + 1e-9).saturating_sub(1)
    }

    pub fn xstar_at(&self, t: f64) -> [f64; 2] {
        self.xstar[self.frame_index(t)]
    }

    pub fn node_positions(&self) -> Vec<[f64; 2]> {
        (0..self.nx * self.ny)
            .map(|i| {
                let (j, i) = (i / self.nx, i % self.nx);
                [self.origin[0] + self.cell[0] * i as f64, self.origin[1] + self.cell[1] * j as f64]
            })
            .collect()
    }
}

/// Belief and heuristic on the evaluation grid at one planning iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub iteration: usize,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// Per-location heuristic reward of the active planner.
    pub reward: Vec<f64>,
    /// Poses of the search tree's belief nodes with their visit counts.
    #[serde(default)]
    pub tree_visits: Vec<([f64; 2], u64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub planner: String,
    pub scenario: String,
    pub config_hash: String,
    pub status: MissionStatus,
    pub entries: Vec<StepEntry>,
    /// Max-value samples drawn at each planning iteration (MVI planners only).
    pub max_values: Vec<Vec<f64>>,
    pub environment: EnvironmentMeta,
    pub final_mean: Vec<f64>,
    pub final_variance: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub metrics: MetricReport,
    /// Wall-clock seconds per step; excluded from reproducibility comparisons.
    pub wall_time: Vec<f64>,
}

impl TrialRecord {
    pub fn poses(&self) -> impl Iterator<Item = &Pose> + '_ {
        self.entries.iter().map(|e| &e.pose)
    }

    pub fn sample_count(&self) -> usize {
        self.entries.iter().map(|e| e.samples.len()).sum()
    }

    pub fn path_length(&self) -> f64 {
        self.entries.last().map_or(0.0, |e| e.path_length)
    }

    /// Copy with timing stripped, for comparing two runs.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time: Vec::new(),
            ..self.clone()
        }
    }

    #[cfg(test)]
    pub(crate) fn empty_for_tests() -> Self {
        Self {
            trial: 0,
            seed: 0,
            planner: String::new(),
            scenario: String::new(),
            config_hash: String::new(),
            status: MissionStatus::BudgetExhausted,
            entries: Vec::new(),
            max_values: Vec::new(),
            environment: EnvironmentMeta {
                seed: 0,
                source: FieldSource::Analytic,
                nx: 2,
                ny: 2,
                origin: [0.0, 0.0],
                cell: [1.0, 1.0],
                frame_times: vec![0.0],
                xstar: vec![[0.0, 0.0]],
                fstar: vec![0.0],
                truth: vec![0.0; 4],
                obstacles: Vec::new(),
            },
            final_mean: Vec::new(),
            final_variance: Vec::new(),
            snapshots: Vec::new(),
            metrics: MetricReport {
                mss_reward: 0,
                rmse: 0.0,
                xstar_error: 0.0,
            },
            wall_time: Vec::new(),
        }
    }
}
