//! Command-line front end for the `lattice-approx` library.
//!
//! Every subcommand takes its parameters from flags, from a TOML file given
//! with `--config`, or both (flags win). Results go to stdout or, with
//! `--out DIR`, to `DIR/<command>.csv`, `DIR/<command>.jsonl` and
//! `DIR/manifest.json`.

pub mod commands;
pub mod output;
pub mod params;

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Result;
use clap::Parser;

use commands::Command;
use output::{Format, Report, RunManifest};

#[derive(Parser, Debug)]
#[command(
    name = "lattice-approx",
    version,
    about = "Diophantine approximation experiments on random lattices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML file with parameter defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory; without it results go to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    pub format: Format,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

/// Runs the parsed command line. Returns the report so callers can inspect
/// the verdict.
pub fn run(cli: &Cli) -> Result<Report> {
    let started = unix_now();
    let flags = cli.command.params().clone();
    let params = match &cli.config {
        Some(path) => flags.over(params::Params::load(path)?),
        None => flags,
    };
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(w) = cli.workers {
            if w == 0 {
                anyhow::bail!("invalid value for `workers`: must be at least 1");
            }
            b = b.num_threads(w);
        }
        b.build()?
    };
    let report = pool.install(|| cli.command.run(&params))?;
    match &cli.out {
        Some(dir) => {
            let manifest = RunManifest {
                tool: env!("CARGO_PKG_NAME").into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: cli.command.name().into(),
                master_seed: params.seed.unwrap_or(0),
                config: params,
                workers: pool.current_num_threads(),
                format: cli.format,
                started_unix: started,
                finished_unix: unix_now(),
                outputs: Default::default(),
            };
            output::write_report(dir, &report, cli.format, manifest)?;
        }
        None => output::print_report(&report, cli.format)?,
    }
    Ok(report)
}
