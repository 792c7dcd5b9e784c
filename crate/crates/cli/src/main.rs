use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use fastron::bench::{
    label_dump, parse_config, run_dynamic_bench, run_dynamic_sweep, run_rrt_bench, run_static_bench,
    write_csv, write_label_csv, ScenarioSpec,
};
use fastron::planner::write_path_csv;

/// Benchmarks for the kernel-perceptron proxy collision checker.
#[derive(Debug, Parser)]
#[command(name = "fastron", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Recall, false-positive rate and query time per obstacle count.
    StaticBench(Common),
    /// Moving obstacles with per-cycle active learning.
    DynamicBench {
        #[command(flatten)]
        common: Common,
        /// Sweep dataset size and allowance instead; writes one row per pair.
        #[arg(long)]
        sweep: bool,
    },
    /// RRT with the learned checker against RRT with the kinematic checker.
    RrtBench {
        #[command(flatten)]
        common: Common,
        /// Also write the first path found with the learned checker.
        #[arg(long)]
        path_out: Option<PathBuf>,
    },
    /// Dataset points with their kinematic labels in the first scene.
    LabelDump(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file of `key = value` lines; defaults apply otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn spec(&self) -> Result<ScenarioSpec> {
        let mut spec = match &self.config {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                parse_config(&text).with_context(|| format!("in {}", path.display()))?
            }
            None => ScenarioSpec::default(),
        };
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        Ok(spec)
    }

    fn output(&self) -> Result<Box<dyn Write>> {
        open(self.out.as_deref())
    }
}

fn open(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".into(), |v| format!("{:.2}%", 100.0 * v))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::StaticBench(common) => {
            let rows = run_static_bench(&common.spec()?)?;
            for r in &rows {
                eprintln!(
                    "obstacles {}: recall {} fpr {} kcd/fcd {:.2}",
                    r.obstacle_count,
                    opt(r.recall),
                    opt(r.fpr),
                    r.ratio
                );
            }
            write_csv(&rows, common.output()?)?;
        }
        Command::DynamicBench { common, sweep } => {
            let spec = common.spec()?;
            if sweep {
                let rows = run_dynamic_sweep(&spec)?;
                write_csv(&rows, common.output()?)?;
            } else {
                let report = run_dynamic_bench(&spec)?;
                let s = &report.summary;
                eprintln!(
                    "recall {} fpr {} max kcd queries {} of {}",
                    opt(s.recall),
                    opt(s.fpr),
                    s.max_kcd_queries,
                    s.allowance
                );
                write_csv(&report.cycles, common.output()?)?;
            }
        }
        Command::RrtBench { common, path_out } => {
            let report = run_rrt_bench(&common.spec()?)?;
            let s = &report.summary;
            eprintln!(
                "fcd {:.0} us, kcd {:.0} us, kcd/fcd {:.2}; fcd paths {} free, kcd paths {} free",
                s.fcd_time_mean_us,
                s.kcd_time_mean_us,
                s.ratio,
                opt(s.fcd_valid_pooled),
                opt(s.kcd_valid_pooled)
            );
            write_csv(&report.rows, common.output()?)?;
            if let Some(p) = path_out {
                write_path_csv(&report.example_path, open(Some(&p))?)?;
            }
        }
        Command::LabelDump(common) => {
            let rows = label_dump(&common.spec()?)?;
            write_label_csv(&rows, common.output()?)?;
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
