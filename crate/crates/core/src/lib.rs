//! Maximum seek-and-sample planning.
//!
//! A robot explores an unknown scalar field to find its global maximum and
//! collect as many samples near it as possible. The crate provides the
//! pieces of that loop:
//!
//! - [`gp`]: Gaussian-process belief, joint sampling and random-feature posterior samples.
//! - [`acquisition`]: maximum-value information and GP-UCB heuristic rewards.
//! - [`planner`]: continuous-observation MCTS with progressive widening and the baselines.
//! - [`world`]: simulated ground truth, obstacles and vehicle action primitives.
//! - [`metrics`]: mission scoring and the Mann-Whitney U test.
//! - [`harness`]: configuration, the mission loop, batches and plot exports.

pub mod acquisition;
pub mod gp;
pub mod harness;
pub mod metrics;
pub mod planner;
pub mod world;
