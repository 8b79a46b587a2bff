//! Scenario configuration, experiment orchestration and file output for the
//! `wonglens` command line tool.

pub mod catalog;
pub mod commands;
pub mod config;
pub mod error;
pub mod lens_file;
pub mod output;
pub mod scenario;

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Experiment, ScenarioConfig};
use crate::error::{CliError, CliResult};
use crate::scenario::Scenario;

#[derive(Debug, Parser)]
#[command(name = "wonglens", version, about = "Colored particles in Yang-Mills fields: lens data and boundary recovery")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment selected in the config.
    Run(CommonArgs),
    /// Integrate trajectories and write dense samples with conservation diagnostics.
    Simulate(CommonArgs),
    /// Compute lens data over the entry grid.
    LensTable(CommonArgs),
    /// Evaluate the pseudo-linearization identity and the weighted X-ray transform.
    VerifyIdentity(CommonArgs),
    /// Recover the boundary field strength from a stored lens table.
    RecoverJet(CommonArgs),
    /// Grid minima of the convexity quantities and a charge-scale sweep.
    CheckConvexity(CommonArgs),
    /// Compare lens data of a connection and a gauge transform of it.
    GaugeDemo(CommonArgs),
    /// List catalog scenarios, or print one as TOML.
    Catalog { name: Option<String> },
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Scenario file, or `catalog:NAME`.
    #[arg(long)]
    pub config: String,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Dotted-path override, e.g. `integrator.rel_tol=1e-8`; repeatable.
    #[arg(long = "tol-override", value_name = "KEY=VAL")]
    pub tol_override: Vec<String>,
    /// Lens table for `recover-jet`.
    #[arg(long)]
    pub lens_table: Option<PathBuf>,
}

/// Reads a scenario file or catalog entry and applies overrides.
pub fn load_config(source: &str, overrides: &[String], seed: Option<u64>) -> CliResult<ScenarioConfig> {
    let text = match source.strip_prefix("catalog:") {
        Some(name) => catalog::get(name)
            .ok_or_else(|| CliError::Config(format!("no catalog scenario `{name}`")))?
            .to_toml(),
        None => fs::read_to_string(source).map_err(|e| CliError::Config(format!("{source}: {e}")))?,
    };
    let mut cfg = ScenarioConfig::from_toml_with_overrides(&text, overrides)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run_with(args: &CommonArgs, experiment: Option<Experiment>) -> CliResult<Vec<PathBuf>> {
    if let Some(t) = args.threads {
        // A second initialisation in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
    let cfg = load_config(&args.config, &args.tol_override, args.seed)?;
    let experiment = experiment.unwrap_or(cfg.experiment);
    let scenario = Scenario::build(cfg)?;
    fs::create_dir_all(&args.out)?;
    let resolved = args.out.join("config.toml");
    output::write_atomic(&resolved, scenario.config.to_toml().as_bytes())?;
    let opts = commands::RunOptions {
        out: args.out.clone(),
        lens_table: args.lens_table.clone(),
    };
    let mut paths = vec![resolved];
    paths.extend(commands::run_experiment(&scenario, experiment, &opts)?);
    Ok(paths)
}

/// Executes a parsed command line, printing written paths.
pub fn run(cli: Cli) -> CliResult<()> {
    use Experiment::*;
    let (args, exp) = match &cli.command {
        Command::Run(a) => (a, None),
        Command::Simulate(a) => (a, Some(Simulate)),
        Command::LensTable(a) => (a, Some(LensTable)),
        Command::VerifyIdentity(a) => (a, Some(VerifyIdentity)),
        Command::RecoverJet(a) => (a, Some(RecoverJet)),
        Command::CheckConvexity(a) => (a, Some(CheckConvexity)),
        Command::GaugeDemo(a) => (a, Some(GaugeDemo)),
        Command::Catalog { name } => {
            match name {
                None => catalog::NAMES.iter().for_each(|n| println!("{n}")),
                Some(n) => {
                    let cfg = catalog::get(n).ok_or_else(|| CliError::Config(format!("no catalog scenario `{n}`")))?;
                    print!("{}", cfg.to_toml());
                }
            }
            return Ok(());
        }
    };
    for p in run_with(args, exp)? {
        println!("{}", p.display());
    }
    Ok(())
}
