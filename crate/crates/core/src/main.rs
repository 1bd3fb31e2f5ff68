use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mss_core::harness::{
    export_plot_data, load_record, resolve_out_dir, run_batch, write_batch, ExperimentConfig, HarnessError, PlotKind,
    PlotSource, ResultsFile,
};
use mss_core::metrics::mann_whitney_u;

#[derive(Parser)]
#[command(name = "mss", about = "Maximum seek-and-sample experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every trial of a config and write results.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        /// Base seed; trial i uses seed + i.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; falls back to $MSS_OUT_DIR, then ./results.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write plot data from a trial record, or a results file for reward-density.
    Export {
        #[arg(long)]
        record: PathBuf,
        /// belief-heatmap, reward-heatmap, trajectory or reward-density.
        #[arg(long, value_parser = parse_kind)]
        what: PlotKind,
        /// Planning iteration of the snapshot to use.
        #[arg(long)]
        snapshot: Option<usize>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mann-Whitney U test of mss_reward between the designated planners of two results files.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

fn parse_kind(s: &str) -> Result<PlotKind, String> {
    PlotKind::parse(s).ok_or_else(|| {
        let names: Vec<&str> = PlotKind::ALL.iter().map(|k| k.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> HarnessError + '_ {
    move |e| HarnessError::Io(format!("{}: {e}", path.display()))
}

fn run(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Run {
            config,
            trials,
            seed,
            out,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(n) = trials {
                cfg.trials = n;
            }
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            cfg.validate()?;
            let dir = resolve_out_dir(out.as_deref());
            let batch = run_batch(&cfg)?;
            write_batch(&dir, &batch)?;
            print!("{}", batch.results.summary_text());
            println!("results written to {}", dir.display());
        }
        Command::Export {
            record,
            what,
            snapshot,
            out,
        } => {
            let text = if what == PlotKind::RewardDensity {
                let results = ResultsFile::load(&record)?;
                export_plot_data(PlotSource::Batch(&results), what, snapshot)?
            } else {
                let r = load_record(&record)?;
                export_plot_data(PlotSource::Record(&r), what, snapshot)?
            };
            match out {
                Some(path) => std::fs::write(&path, text).map_err(io_err(&path))?,
                None => print!("{text}"),
            }
        }
        Command::Compare { a, b } => {
            let ra = ResultsFile::load(&a)?;
            let rb = ResultsFile::load(&b)?;
            let xa = ra.rewards_of(&ra.aggregate.designated);
            let xb = rb.rewards_of(&rb.aggregate.designated);
            if xa.is_empty() || xb.is_empty() {
                return Err(HarnessError::Parse("a results file has no trials".into()));
            }
            let r = mann_whitney_u(&xa, &xb);
            let kind = if r.exact { "exact" } else { "normal approximation" };
            println!(
                "{} (n = {}) vs {} (n = {}): U = {} p = {:.6} ({kind})",
                ra.aggregate.designated,
                xa.len(),
                rb.aggregate.designated,
                xb.len(),
                r.u,
                r.p
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
