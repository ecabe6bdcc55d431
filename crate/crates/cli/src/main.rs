//! Command-line front end for the polytope laboratory.
//!
//! `run` executes the experiment described by a JSON config file and writes
//! a run directory (config.json, rows.csv, optional report.json, manifest
//! last). `scaling` and `inclusion` are shorthands that force the experiment
//! kind before running. `verify` executes the built-in verification suite and
//! maps its outcome to the exit code. `report` summarizes a finished run
//! directory from its manifest and rows.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use polylab::harness::{self, ExperimentConfig, ExperimentKind, Row, RunManifest, RunOptions};

#[derive(Parser)]
#[command(name = "polylab", version, about = "Random symmetric polytope laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config file.
    Run(RunFlags),
    /// Run every built-in verification check; exit 0 iff all pass.
    Verify,
    /// Run a scaling study over the config's vertex-count grid.
    Scaling(RunFlags),
    /// Run a moment-body inclusion study over the config's q grid.
    Inclusion(RunFlags),
    /// Summarize a finished run directory.
    Report {
        /// Directory containing manifest.json and rows.csv.
        dir: PathBuf,
    },
}

#[derive(Args)]
struct RunFlags {
    /// Experiment configuration, a single JSON document.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output root; takes precedence over the config and POLYLAB_OUT.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (0 = machine default). Outputs do not depend on this.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Multiply every Monte Carlo budget by this factor.
    #[arg(long, default_value_t = 1.0, value_name = "FACTOR")]
    budget_scale: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(flags) => run_cmd(flags, None),
        Command::Scaling(flags) => run_cmd(flags, Some(ExperimentKind::Scaling)),
        Command::Inclusion(flags) => run_cmd(flags, Some(ExperimentKind::Inclusion)),
        Command::Verify => return verify_cmd(),
        Command::Report { dir } => report_cmd(dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run_cmd(flags: &RunFlags, force: Option<ExperimentKind>) -> Result<()> {
    let text = fs::read_to_string(&flags.config)
        .with_context(|| format!("reading config {}", flags.config.display()))?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if let Some(kind) = force {
        if config.experiment != kind {
            config.experiment = kind;
            config.validate()?;
        }
    }
    let opts = RunOptions {
        out_dir: flags.out.clone(),
        seed_override: flags.seed,
        workers: flags.workers,
        budget_scale: flags.budget_scale,
    };
    let report = harness::run(&config, &opts)?;
    println!("run: {}", report.dir.display());
    println!("experiment: {}", report.manifest.experiment);
    println!("seed: {}", report.manifest.seed);
    println!("rows: {}", report.row_count);
    println!("manifest: {}", report.manifest_path.display());
    Ok(())
}

fn verify_cmd() -> ExitCode {
    let checks = harness::run_all_checks();
    let failed = checks.iter().filter(|c| !c.passed).count();
    for check in &checks {
        println!("{}", check.line());
    }
    if failed == 0 {
        println!("verify: all {} checks passed", checks.len());
        ExitCode::SUCCESS
    } else {
        println!("verify: {failed} of {} checks failed", checks.len());
        ExitCode::FAILURE
    }
}

fn report_cmd(dir: &Path) -> Result<()> {
    let manifest = RunManifest::read(dir)
        .with_context(|| format!("reading manifest in {}", dir.display()))?;
    println!("experiment: {}", manifest.experiment);
    println!(
        "seed: {}  workers: {}  budget_scale: {}",
        manifest.seed, manifest.workers, manifest.budget_scale
    );
    println!("config sha256: {}", manifest.config_sha256);
    println!(
        "wall: {} ms",
        manifest.finished_unix_ms.saturating_sub(manifest.started_unix_ms)
    );
    println!("outputs:");
    for output in &manifest.outputs {
        if output.rows > 0 {
            println!("  {}  {}  {} rows", output.file, &output.sha256[..12], output.rows);
        } else {
            println!("  {}  {}", output.file, &output.sha256[..12]);
        }
    }

    let csv_path = dir.join("rows.csv");
    if !csv_path.exists() {
        return Ok(());
    }
    let mut reader = csv::Reader::from_path(&csv_path)
        .with_context(|| format!("reading {}", csv_path.display()))?;
    // (count, sum, min, max) of `value` per functional, in name order.
    let mut stats: BTreeMap<String, (usize, f64, f64, f64)> = BTreeMap::new();
    for row in reader.deserialize::<Row>() {
        let row = row.context("parsing rows.csv")?;
        let entry = stats
            .entry(row.functional)
            .or_insert((0, 0.0, f64::INFINITY, f64::NEG_INFINITY));
        entry.0 += 1;
        entry.1 += row.value;
        entry.2 = entry.2.min(row.value);
        entry.3 = entry.3.max(row.value);
    }
    println!("functionals:");
    for (name, (count, sum, min, max)) in &stats {
        println!(
            "  {name:<28} {count:>5} rows  mean {:>12.6}  min {:>12.6}  max {:>12.6}",
            sum / *count as f64,
            min,
            max
        );
    }
    Ok(())
}
