use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, PlannerKind};
use super::mission::{build_world, run_trial_with_world};
use super::HarnessError;
use crate::metrics::{mann_whitney_u, summarize, MetricReport, MissionStatus, Summary, TrialRecord};

/// Environment variable that overrides the default output directory.
pub const OUT_DIR_ENV: &str = "MSS_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "results";
pub const QUARTILE_METHOD: &str = "linear";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialLine {
    pub trial: usize,
    pub seed: u64,
    pub planner: String,
    pub config_hash: String,
    pub status: MissionStatus,
    pub metrics: MetricReport,
    /// Per-trial step log, relative to the results directory.
    pub log: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerSummary {
    pub planner: String,
    pub trials: usize,
    pub mss_reward: Summary,
    pub rmse: Summary,
    pub xstar_error: Summary,
}

/// Mann-Whitney test of `mss_reward` between the designated planner and another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub metric: String,
    pub u: f64,
    pub p: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub config_hash: String,
    pub designated: String,
    pub quartile_method: String,
    pub planners: Vec<PlannerSummary>,
    pub comparisons: Vec<Comparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ResultLine {
    Trial(TrialLine),
    Aggregate(Aggregate),
}

/// Trial lines followed by one aggregate line.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultsFile {
    pub trials: Vec<TrialLine>,
    pub aggregate: Aggregate,
}

impl ResultsFile {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let lines = self
            .trials
            .iter()
            .cloned()
            .map(ResultLine::Trial)
            .chain(std::iter::once(ResultLine::Aggregate(self.aggregate.clone())));
        for line in lines {
            out.push_str(&serde_json::to_string(&line).expect("results serialize"));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut trials = Vec::new();
        let mut aggregate = None;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let parsed: ResultLine =
                serde_json::from_str(line).map_err(|e| HarnessError::Parse(format!("line {}: {e}", i + 1)))?;
            match parsed {
                ResultLine::Trial(t) if aggregate.is_none() => trials.push(t),
                ResultLine::Aggregate(a) if aggregate.is_none() => aggregate = Some(a),
                _ => return Err(HarnessError::Parse(format!("line {}: record after the aggregate", i + 1))),
            }
        }
        let aggregate = aggregate.ok_or_else(|| HarnessError::Parse("missing aggregate line".into()))?;
        Ok(Self { trials, aggregate })
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// `mss_reward` of every trial line of one planner, in trial order.
    pub fn rewards_of(&self, planner: &str) -> Vec<f64> {
        self.trials
            .iter()
            .filter(|t| t.planner == planner)
            .map(|t| t.metrics.mss_reward as f64)
            .collect()
    }

    /// Human-readable table in the "median (IQR)" format.
    pub fn summary_text(&self) -> String {
        let a = &self.aggregate;
        let mut s = String::new();
        let _ = writeln!(s, "config {}  quartiles: {}", a.config_hash, a.quartile_method);
        let _ = writeln!(s, "{:<12} {:>6} {:>22} {:>22} {:>22}", "planner", "trials", "mss_reward", "rmse", "xstar_error");
        let cell = |m: &Summary| format!("{:.3} ({:.3})", m.median, m.iqr);
        for p in &a.planners {
            let _ = writeln!(
                s,
                "{:<12} {:>6} {:>22} {:>22} {:>22}",
                p.planner,
                p.trials,
                cell(&p.mss_reward),
                cell(&p.rmse),
                cell(&p.xstar_error)
            );
        }
        for c in &a.comparisons {
            let kind = if c.exact { "exact" } else { "normal" };
            let _ = writeln!(s, "{} vs {} ({}): U = {} p = {:.4} ({kind})", c.a, c.b, c.metric, c.u, c.p);
        }
        s
    }
}

/// Medians, IQRs and Mann-Whitney tests of each planner against the designated one.
pub fn aggregate(trials: &[TrialLine], designated: &str, config_hash: &str, planners: &[String]) -> Aggregate {
    let summaries: Vec<PlannerSummary> = planners
        .iter()
        .filter_map(|p| {
            let rows: Vec<&MetricReport> = trials.iter().filter(|t| &t.planner == p).map(|t| &t.metrics).collect();
            if rows.is_empty() {
                return None;
            }
            let col = |f: fn(&MetricReport) -> f64| rows.iter().map(|m| f(m)).collect::<Vec<_>>();
            Some(PlannerSummary {
                planner: p.clone(),
                trials: rows.len(),
                mss_reward: summarize(&col(|m| m.mss_reward as f64)),
                rmse: summarize(&col(|m| m.rmse)),
                xstar_error: summarize(&col(|m| m.xstar_error)),
            })
        })
        .collect();
    let reward = |p: &str| -> Vec<f64> {
        trials
            .iter()
            .filter(|t| t.planner == p)
            .map(|t| t.metrics.mss_reward as f64)
            .collect()
    };
    let base = reward(designated);
    let comparisons = planners
        .iter()
        .filter(|p| p.as_str() != designated)
        .filter_map(|p| {
            let other = reward(p);
            if base.is_empty() || other.is_empty() {
                return None;
            }
            let r = mann_whitney_u(&base, &other);
            Some(Comparison {
                a: designated.to_string(),
                b: p.clone(),
                metric: "mss_reward".into(),
                u: r.u,
                p: r.p,
                exact: r.exact,
            })
        })
        .collect();
    Aggregate {
        config_hash: config_hash.to_string(),
        designated: designated.to_string(),
        quartile_method: QUARTILE_METHOD.into(),
        planners: summaries,
        comparisons,
    }
}

pub fn trial_log_name(trial: usize, planner: &str) -> String {
    format!("trials/trial_{trial:04}_{planner}.json")
}

#[derive(Debug, Clone)]
pub struct BatchOutput {
    pub results: ResultsFile,
    pub records: Vec<TrialRecord>,
}

/// Runs every (trial, planner) pair of the config concurrently; all planners of a trial share its world.
pub fn run_batch(config: &ExperimentConfig) -> Result<BatchOutput, HarnessError> {
    config.validate()?;
    let planners: Vec<PlannerKind> = config.planners();
    let jobs: Vec<(usize, PlannerKind)> =
        (0..config.trials).flat_map(|t| planners.iter().map(move |&p| (t, p))).collect();
    let records: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(trial, planner)| {
            let world = build_world(config, trial)?;
            run_trial_with_world(config, planner, world, trial)
        })
        .collect::<Result<_, _>>()?;
    let hash = config.hash();
    let trials: Vec<TrialLine> = records
        .iter()
        .map(|r| TrialLine {
            trial: r.trial,
            seed: r.seed,
            planner: r.planner.clone(),
            config_hash: r.config_hash.clone(),
            status: r.status.clone(),
            metrics: r.metrics,
            log: trial_log_name(r.trial, &r.planner),
        })
        .collect();
    let names: Vec<String> = planners.iter().map(|p| p.name().to_string()).collect();
    let aggregate = aggregate(&trials, config.planner.name(), &hash, &names);
    Ok(BatchOutput {
        results: ResultsFile { trials, aggregate },
        records,
    })
}

/// `--out` wins over the environment variable, which wins over the default.
pub fn resolve_out_dir(cli: Option<&Path>) -> PathBuf {
    match cli {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT_DIR), PathBuf::from),
    }
}

/// Writes `results.jsonl`, `summary.txt` and one step log per trial.
pub fn write_batch(dir: &Path, batch: &BatchOutput) -> Result<(), HarnessError> {
    let io = |e: std::io::Error| HarnessError::Io(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir.join("trials")).map_err(io)?;
    for r in &batch.records {
        let text = serde_json::to_string(r).expect("record serializes");
        std::fs::write(dir.join(trial_log_name(r.trial, &r.planner)), text).map_err(io)?;
    }
    std::fs::write(dir.join("results.jsonl"), batch.results.to_jsonl()).map_err(io)?;
    std::fs::write(dir.join("summary.txt"), batch.results.summary_text()).map_err(io)?;
    Ok(())
}

pub fn load_record(path: &Path) -> Result<TrialRecord, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Parse(e.to_string()))
}
