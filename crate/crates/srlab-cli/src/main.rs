//! Command line driver for sparse representation experiments: dictionary
//! generation, config-driven sweeps with CSV/JSON/SVG output, and table
//! comparison for reproducibility checks.

mod compare;
mod config;
mod run;
mod svg;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use srlab::dict::{from_rate_with_budget, random_dictionary_with_budget, RateSpec};
use srlab::Seed;

use crate::config::ExperimentConfig;
use crate::run::{memory_budget, Format, RunOptions};

#[derive(Parser)]
#[command(name = "srlab", version, about = "sparse representation experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random unit-atom dictionary and save it to a file.
    GenDict(GenDictArgs),
    /// Run an approx-sweep experiment config.
    Approx(RunArgs),
    /// Run a bounds-table experiment config.
    Bounds(RunArgs),
    /// Run a refine-staircase experiment config.
    Refine(RunArgs),
    /// Run a quant-check experiment config.
    Quant(RunArgs),
    /// Run any experiment config, dispatching on its `kind`.
    Sweep(RunArgs),
    /// Compare two CSV tables cell by cell within a relative tolerance.
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for tables, charts, and metadata.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; 0 uses one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Table output format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct GenDictArgs {
    /// Signal dimension n.
    #[arg(long)]
    dim: usize,
    /// Number of atoms; exclusive with --rate.
    #[arg(long)]
    size: Option<u64>,
    /// Rate in bits per dimension, giving 2^(rate*dim) atoms; exclusive with --size.
    #[arg(long)]
    rate: Option<f64>,
    /// Generation seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; a `.json` sidecar records the generation parameters.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// First CSV table.
    a: PathBuf,
    /// Second CSV table.
    b: PathBuf,
    /// Maximum allowed relative deviation per cell.
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::GenDict(args) => exit_on_error(gen_dict(&args)),
        Command::Approx(args) => exit_on_error(run_kind(&args, Some("approx-sweep"))),
        Command::Bounds(args) => exit_on_error(run_kind(&args, Some("bounds-table"))),
        Command::Refine(args) => exit_on_error(run_kind(&args, Some("refine-staircase"))),
        Command::Quant(args) => exit_on_error(run_kind(&args, Some("quant-check"))),
        Command::Sweep(args) => exit_on_error(run_kind(&args, None)),
        Command::Compare(args) => {
            ExitCode::from(compare::run_compare(&args.a, &args.b, args.tolerance))
        }
    }
}

fn exit_on_error(result: Result<()>) -> ExitCode {
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run_kind(args: &RunArgs, expected: Option<&str>) -> Result<()> {
    let config = ExperimentConfig::load(&args.config)?;
    if let Some(kind) = expected {
        if config.kind_name() != kind {
            bail!(
                "config {} has kind {:?}, expected {:?} (use `sweep` to run any kind)",
                args.config.display(),
                config.kind_name(),
                kind
            );
        }
    }
    let opts = RunOptions {
        out: args.out.clone(),
        format: args.format,
        threads: args.threads,
    };
    run::run(config, &opts, args.seed)
}

fn gen_dict(args: &GenDictArgs) -> Result<()> {
    let budget = memory_budget()?;
    let seed = Seed(args.seed);
    let dict = match (args.size, args.rate) {
        (Some(size), None) => random_dictionary_with_budget(args.dim, size, seed, budget)?,
        (None, Some(rate)) => from_rate_with_budget(RateSpec::new(args.dim, rate)?, seed, budget)?,
        (Some(_), Some(_)) => bail!("--size and --rate are mutually exclusive"),
        (None, None) => bail!("one of --size or --rate is required"),
    };
    dict.save(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "wrote {} ({} atoms, dim {}, seed {})",
        args.out.display(),
        dict.len(),
        dict.dim(),
        args.seed
    );
    Ok(())
}
