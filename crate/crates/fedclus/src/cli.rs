//! Command line entry point: `generate`, `run`, `report`, `validate`.
//!
//! Exit codes: 0 success, 1 usage error, 2 configuration error, 3 when a
//! run or validation finishes with recorded failures.

use std::path::PathBuf;

use anyhow::{anyhow, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use fedclus_core::{generate_synthetic, partition, SplitMode, SplitSpec, SynSpec};

use crate::config::{parse_syn_kind, ConfigError, ExperimentConfig};
use crate::dataio::{write_dataset_csv, write_split_sidecar};
use crate::report::{grouped, parse_group_by, print_aggregates, write_figures};
use crate::results::read_results;
use crate::runner::{errors_path, run_experiment, validate_experiment, RunOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Parser)]
#[command(
    name = "fedclus",
    about = "Federated clustering experiments: p-FClus, k-FED, MFC and centralized baselines",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a synthetic dataset CSV (and optionally a split sidecar).
    Generate(GenerateArgs),
    /// Execute an experiment configuration.
    Run(RunArgs),
    /// Aggregate a results file into summary tables.
    Report(ReportArgs),
    /// Check a configuration and its splits without running experiments.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Synthetic family: NO, LO or O.
    #[arg(long = "syn", value_name = "KIND")]
    syn: String,
    #[arg(long, default_value_t = 10)]
    clusters: usize,
    #[arg(long = "per-cluster", value_name = "N")]
    per_cluster: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path for the labeled dataset.
    #[arg(long)]
    out: PathBuf,
    /// Also write a split sidecar here.
    #[arg(long = "split-out", requires = "clients", requires = "het")]
    split_out: Option<PathBuf>,
    #[arg(long)]
    clients: Option<usize>,
    /// Heterogeneity level for the sidecar split.
    #[arg(long)]
    het: Option<usize>,
    /// Split mode for the sidecar: balanced or unequal.
    #[arg(long, default_value = "balanced")]
    mode: String,
    #[arg(long)]
    skew: Option<f64>,
    #[arg(long = "min-points")]
    min_points: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Skip (cell, seed) jobs already present in the output file.
    #[arg(long)]
    resume: bool,
    /// Record wall-clock runtimes in the runtime_ms column. Off by default
    /// so rerunning a config reproduces the results file byte for byte.
    #[arg(long)]
    timings: bool,
    /// Worker thread cap; FEDCLUS_WORKERS overrides.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated grouping columns, e.g. "method,H".
    #[arg(long = "group-by")]
    group_by: Option<String>,
    /// Write the aggregate CSV here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Emit per-figure CSVs (metric x H panels) into this directory.
    #[arg(long)]
    figures: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    config: PathBuf,
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return code;
        }
    };
    match cli.command {
        Command::Generate(args) => report_outcome(generate(args)),
        Command::Run(args) => match run_cmd(args) {
            Ok(code) => code,
            Err(err) => fail(err),
        },
        Command::Report(args) => report_outcome(report_cmd(args)),
        Command::Validate(args) => match validate_cmd(args) {
            Ok(code) => code,
            Err(err) => fail(err),
        },
    }
}

fn fail(err: anyhow::Error) -> i32 {
    eprintln!("error: {err:#}");
    if err.downcast_ref::<ConfigError>().is_some() {
        EXIT_CONFIG
    } else {
        EXIT_USAGE
    }
}

fn report_outcome(result: Result<()>) -> i32 {
    match result {
        Ok(()) => EXIT_OK,
        Err(err) => fail(err),
    }
}

fn generate(args: GenerateArgs) -> Result<()> {
    let kind = parse_syn_kind(&args.syn)
        .ok_or_else(|| anyhow!("--syn {}: expected NO, LO or O", args.syn))?;
    let spec = SynSpec {
        kind,
        n_clusters: args.clusters,
        points_per_cluster: args.per_cluster,
        dim: args.dim,
        rng_seed: args.seed,
    };
    let data = generate_synthetic(&spec)?;
    write_dataset_csv(&args.out, &data)?;
    println!(
        "wrote {} points ({} clusters x {}) to {}",
        data.len(),
        args.clusters,
        args.per_cluster,
        args.out.display()
    );

    if let Some(split_out) = args.split_out {
        let mode = match args.mode.as_str() {
            "balanced" => SplitMode::Balanced,
            "unequal" => SplitMode::Unequal,
            other => return Err(anyhow!("--mode {other}: expected balanced or unequal")),
        };
        let mut spec = SplitSpec::new(
            mode,
            args.clients.expect("clap requires"),
            args.het.expect("clap requires"),
            args.seed,
        );
        if let Some(skew) = args.skew {
            spec = spec.with_skew(skew);
        }
        if let Some(min_points) = args.min_points {
            spec = spec.with_min_points(min_points);
        }
        let split = partition(&data, &spec)?;
        write_split_sidecar(&split_out, &split)?;
        println!(
            "wrote split of {} clients at H={} to {}",
            spec.clients,
            spec.heterogeneity,
            split_out.display()
        );
    }
    Ok(())
}

fn load_config(path: &std::path::Path) -> Result<ExperimentConfig> {
    ExperimentConfig::from_path(path).map_err(anyhow::Error::new)
}

fn worker_cap(cli: Option<usize>, cfg: &ExperimentConfig) -> usize {
    // the environment variable overrides every other source of the cap
    if let Ok(value) = std::env::var("FEDCLUS_WORKERS") {
        if let Ok(n) = value.trim().parse::<usize>() {
            return n.max(1);
        }
    }
    cli.or(cfg.workers).unwrap_or(1).max(1)
}

fn run_cmd(args: RunArgs) -> Result<i32> {
    let cfg = load_config(&args.config)?;
    let opts = RunOptions {
        resume: args.resume,
        timings: args.timings,
        workers: worker_cap(args.workers, &cfg),
    };
    let summary = run_experiment(&cfg, &opts)?;
    println!(
        "wrote {} rows to {} ({} jobs reused, {} failures)",
        summary.rows_written,
        cfg.output.display(),
        summary.jobs_skipped,
        summary.errors
    );
    if summary.errors > 0 {
        println!("failure details: {}", errors_path(&cfg.output).display());
        Ok(EXIT_PARTIAL)
    } else {
        Ok(EXIT_OK)
    }
}

fn report_cmd(args: ReportArgs) -> Result<()> {
    let rows = read_results(&args.input)?;
    let keys = match &args.group_by {
        Some(spec) => parse_group_by(spec)?,
        None => crate::results::GroupKey::FULL_CELL.to_vec(),
    };
    let aggregates = grouped(&rows, &keys);
    match &args.output {
        Some(path) => {
            let mut file = std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            print_aggregates(&mut file, &keys, &aggregates)?;
            println!(
                "wrote {} aggregate rows to {}",
                aggregates.len(),
                path.display()
            );
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            print_aggregates(&mut stdout, &keys, &aggregates)?;
        }
    }
    if let Some(dir) = &args.figures {
        let files = write_figures(&rows, dir)?;
        println!("wrote {} figure files to {}", files.len(), dir.display());
    }
    Ok(())
}

fn validate_cmd(args: ValidateArgs) -> Result<i32> {
    let cfg = load_config(&args.config)?;
    let (lines, all_ok) = validate_experiment(&cfg)?;
    for line in &lines {
        println!("{line}");
    }
    println!(
        "{}: {} checks",
        if all_ok { "valid" } else { "INVALID" },
        lines.len()
    );
    Ok(if all_ok { EXIT_OK } else { EXIT_PARTIAL })
}
