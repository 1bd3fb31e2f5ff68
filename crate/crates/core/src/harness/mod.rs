//! Experiment driver: configuration, the mission loop, batches, persistence and plot exports.

mod config;
mod export;
mod mission;
mod results;

pub use config::{
    BoustroConfig, EnvironmentConfig, ExperimentConfig, KernelConfig, MviConfig, ObstacleConfig, PlannerKind,
    Scenario, UcbConfig,
};
pub use export::{export_plot_data, heatmap_mass, kde, silverman_bandwidth, PlotKind, PlotSource, BANDWIDTH_RULE, KDE_POINTS};
pub use mission::{build_world, derive_seed, run_trial, run_trial_with_world, SeedRole, TrialWorld};
pub use results::{
    aggregate, load_record, resolve_out_dir, run_batch, trial_log_name, write_batch, Aggregate, BatchOutput,
    Comparison, PlannerSummary, ResultLine, ResultsFile, TrialLine, DEFAULT_OUT_DIR, OUT_DIR_ENV, QUARTILE_METHOD,
};

use crate::gp::GpError;
use crate::planner::PlanError;
use crate::world::WorldError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
    #[error("export: {0}")]
    Export(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Gp(#[from] GpError),
}
