//! The simulated world: ground-truth fields, obstacle maps, vehicle primitives and noisy sensing.

mod field;
mod geometry;
mod obstacles;
mod primitives;

pub use field::{
    generate_environment, load_environment, observe, parse_environment, FieldSource, GridSpec, GroundTruthField,
    ObservationBatch, MIN_GENERATION_NODES,
};
pub use geometry::{Pose, Rect};
pub use obstacles::{
    feasible_actions, load_obstacles, parse_obstacles, KnowledgeMode, ObstacleMap, DEFAULT_BLOCK_SIDE,
    DEFAULT_PADDING, DEFAULT_SENSING_RADIUS,
};
pub use primitives::{dubins_primitives, ActionPrimitive, PrimitiveKind, PrimitiveSet, PATH_CHECK_STEP};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid obstacle map: {0}")]
    InvalidMap(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("correlation matrix not positive definite after jitter {jitter:e}")]
    Factorization { jitter: f64 },
    #[error("i/o error: {0}")]
    Io(String),
}
