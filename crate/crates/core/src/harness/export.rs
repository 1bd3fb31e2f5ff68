use std::fmt::Write as _;

use super::results::ResultsFile;
use super::HarnessError;
use crate::metrics::{quantile, TrialRecord};

pub const KDE_POINTS: usize = 512;
pub const BANDWIDTH_RULE: &str = "silverman";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    BeliefHeatmap,
    RewardHeatmap,
    Trajectory,
    RewardDensity,
}

impl PlotKind {
    pub const ALL: [PlotKind; 4] = [
        PlotKind::BeliefHeatmap,
        PlotKind::RewardHeatmap,
        PlotKind::Trajectory,
        PlotKind::RewardDensity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::BeliefHeatmap => "belief-heatmap",
            PlotKind::RewardHeatmap => "reward-heatmap",
            PlotKind::Trajectory => "trajectory",
            PlotKind::RewardDensity => "reward-density",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// What plot data is exported from.
#[derive(Debug, Clone, Copy)]
pub enum PlotSource<'a> {
    Record(&'a TrialRecord),
    Batch(&'a ResultsFile),
}

/// Silverman's rule, `0.9 · min(sd, IQR/1.34) · n^(-1/5)`, with fallbacks for degenerate spread.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    if spread > 0.0 {
        0.9 * spread * n.powf(-0.2)
    } else {
        1e-3 * mean.abs().max(1.0)
    }
}

/// Gaussian KDE on `KDE_POINTS` evenly spaced points over `[min - 4h, max + 4h]`.
pub fn kde(values: &[f64]) -> Vec<(f64, f64)> {
    let h = silverman_bandwidth(values);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min) - 4.0 * h;
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 4.0 * h;
    let norm = 1.0 / (values.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    (0..KDE_POINTS)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (KDE_POINTS - 1) as f64;
            let d: f64 = values.iter().map(|v| (-0.5 * ((x - v) / h).powi(2)).exp()).sum();
            (x, d * norm)
        })
        .collect()
}

fn snapshot_index(record: &TrialRecord, snapshot: Option<usize>) -> Result<usize, HarnessError> {
    match snapshot {
        Some(it) => record
            .snapshots
            .iter()
            .position(|s| s.iteration == it)
            .ok_or_else(|| HarnessError::Export(format!("no snapshot at iteration {it}"))),
        None if record.snapshots.is_empty() => Err(HarnessError::Export("record has no snapshots".into())),
        None => Ok(record.snapshots.len() - 1),
    }
}

fn grid_rows(record: &TrialRecord, values: &[f64]) -> String {
    let mut out = String::from("x,y,value\n");
    for (p, v) in record.environment.node_positions().iter().zip(values) {
        let _ = writeln!(out, "{},{},{}", p[0], p[1], v);
    }
    out
}

/// Delimited plot data with one header line.
///
/// The belief heatmap uses the requested snapshot, or the final posterior
/// mean when none is given. The reward heatmap defaults to the last snapshot.
/// Reward densities need a batch and emit one curve per planner.
pub fn export_plot_data(source: PlotSource<'_>, what: PlotKind, snapshot: Option<usize>) -> Result<String, HarnessError> {
    match (source, what) {
        (PlotSource::Record(r), PlotKind::BeliefHeatmap) => match snapshot {
            None => Ok(grid_rows(r, &r.final_mean)),
            s => Ok(grid_rows(r, &r.snapshots[snapshot_index(r, s)?].mean)),
        },
        (PlotSource::Record(r), PlotKind::RewardHeatmap) => Ok(grid_rows(r, &r.snapshots[snapshot_index(r, snapshot)?].reward)),
        (PlotSource::Record(r), PlotKind::Trajectory) => {
            let mut out = String::from("step,x,y\n");
            for e in &r.entries {
                let _ = writeln!(out, "{},{},{}", e.step, e.pose.x, e.pose.y);
            }
            Ok(out)
        }
        (PlotSource::Batch(b), PlotKind::RewardDensity) => {
            let mut out = format!("# bandwidth: {BANDWIDTH_RULE}\nplanner,reward,density\n");
            for p in &b.aggregate.planners {
                let values = b.rewards_of(&p.planner);
                for (x, d) in kde(&values) {
                    let _ = writeln!(out, "{},{},{}", p.planner, x, d);
                }
            }
            Ok(out)
        }
        (PlotSource::Record(_), PlotKind::RewardDensity) => {
            Err(HarnessError::Export("reward-density needs a results file".into()))
        }
        (PlotSource::Batch(_), k) => Err(HarnessError::Export(format!("{} needs a trial record", k.name()))),
    }
}

/// Values in the data rows of an exported heatmap whose `(x, y)` lies within `radius` of `centre`.
pub fn heatmap_mass(text: &str, centre: [f64; 2], radius: f64) -> f64 {
    text.lines()
        .skip(1)
        .filter_map(|l| {
            let v: Vec<f64> = l.split(',').filter_map(|c| c.parse().ok()).collect();
            (v.len() == 3 && (v[0] - centre[0]).hypot(v[1] - centre[1]) <= radius).then_some(v[2])
        })
        .sum()
}
