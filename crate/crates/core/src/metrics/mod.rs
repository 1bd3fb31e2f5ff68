//! Mission scoring and the significance test used to compare planners.

mod mann_whitney;
mod record;

pub use mann_whitney::{mann_whitney_u, MannWhitney, EXACT_BELOW};
pub use record::{EnvironmentMeta, MissionStatus, Snapshot, StepEntry, TrialRecord};

use serde::{Deserialize, Serialize};

use crate::gp::{GpBelief, GpError};
use crate::world::GroundTruthField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mss_reward: u64,
    pub rmse: f64,
    pub xstar_error: f64,
}

/// Number of points strictly inside the `eps`-ball around `xstar`.
pub fn count_within<'a>(points: impl IntoIterator<Item = &'a [f64; 2]>, xstar: [f64; 2], eps: f64) -> u64 {
    points
        .into_iter()
        .filter(|p| (p[0] - xstar[0]).hypot(p[1] - xstar[1]) < eps)
        .count() as u64
}

/// Logged samples within `eps` of a fixed maximiser.
pub fn mss_reward(record: &TrialRecord, xstar: [f64; 2], eps: f64) -> u64 {
    count_within(record.entries.iter().flat_map(|e| e.samples.iter()), xstar, eps)
}

/// Logged samples within `eps` of the maximiser at each sample's own timestamp.
pub fn mss_reward_tracking(record: &TrialRecord, eps: f64) -> u64 {
    record
        .entries
        .iter()
        .flat_map(|e| e.samples.iter().zip(&e.times))
        .filter(|(p, &t)| {
            let x = record.environment.xstar_at(t);
            (p[0] - x[0]).hypot(p[1] - x[1]) < eps
        })
        .count() as u64
}

pub fn rmse_values(predicted: &[f64], truth: &[f64]) -> f64 {
    assert_eq!(predicted.len(), truth.len());
    assert!(!truth.is_empty());
    let ss: f64 = predicted.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum();
    (ss / truth.len() as f64).sqrt()
}

fn grid_inputs(field: &GroundTruthField, time: Option<f64>) -> Vec<Vec<f64>> {
    (0..field.nx() * field.ny())
        .map(|i| {
            let [x, y] = field.node_position(i);
            match time {
                Some(t) => vec![x, y, t],
                None => vec![x, y],
            }
        })
        .collect()
}

/// Posterior mean on every node of the field's grid.
pub fn mean_on_grid(belief: &GpBelief, field: &GroundTruthField, time: Option<f64>) -> Result<Vec<f64>, GpError> {
    belief.means(&grid_inputs(field, time))
}

/// Root-mean-square error of the posterior mean against the truth on the field's grid.
pub fn rmse(belief: &GpBelief, field: &GroundTruthField, time: Option<f64>) -> Result<f64, GpError> {
    let mu = mean_on_grid(belief, field, time)?;
    let frame = field.frame_index(time.unwrap_or(0.0));
    Ok(rmse_values(&mu, field.frame_values(frame)))
}

/// Distance from the grid argmax of `mean` to `xstar`; ties go to the node closest to `xstar`.
pub fn xstar_error_values(positions: &[[f64; 2]], mean: &[f64], xstar: [f64; 2]) -> f64 {
    assert_eq!(positions.len(), mean.len());
    let top = mean.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    positions
        .iter()
        .zip(mean)
        .filter(|(_, &m)| m == top)
        .map(|(p, _)| (p[0] - xstar[0]).hypot(p[1] - xstar[1]))
        .fold(f64::INFINITY, f64::min)
}

/// Error of the posterior maximiser over the field's admissible grid nodes.
pub fn xstar_error(
    belief: &GpBelief,
    field: &GroundTruthField,
    xstar: [f64; 2],
    time: Option<f64>,
) -> Result<f64, GpError> {
    let mu = mean_on_grid(belief, field, time)?;
    let frame = field.frame_index(time.unwrap_or(0.0));
    let (pos, vals): (Vec<[f64; 2]>, Vec<f64>) = field
        .allowed_nodes(frame)
        .map(|(p, _)| {
            let idx = node_index(field, p);
            (p, mu[idx])
        })
        .unzip();
    Ok(xstar_error_values(&pos, &vals, xstar))
}

fn node_index(field: &GroundTruthField, p: [f64; 2]) -> usize {
    let b = field.bounds();
    let [cx, cy] = field.cell_size();
    let i = ((p[0] - b.xmin) / cx).round() as usize;
    let j = ((p[1] - b.ymin) / cy).round() as usize;
    j * field.nx() + i
}

/// Median and interquartile range with linearly interpolated quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
}

pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(values: &[f64]) -> Summary {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let (q1, median, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
    Summary {
        median,
        q1,
        q3,
        iqr: q3 - q1,
    }
}
