//! `phasescope` command-line front end.
//!
//! Exit status: 0 on success, 2 for configuration errors (including slices
//! with no on-shell nodes), 3 for numerical failures, 1 for I/O errors.

mod commands;
mod config;
mod manifest;
mod recipes;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use clap::{ArgGroup, Args, Parser, Subcommand};
use phasescope::par::Execution;

use crate::config::{Command, ConfigError, RunConfig};
use crate::manifest::RunManifest;

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct NumericalFailure(pub String);

#[derive(Parser)]
#[command(name = "phasescope", version, about = "Lagrangian descriptors, periodic orbits and tube manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Lagrangian-descriptor grids on one or more slices.
    LdMap(RunArgs),
    /// Periodic-orbit family by continuation from the saddle.
    PoFamily(RunArgs),
    /// Globalized stable and unstable tube manifolds of one orbit.
    Manifolds(RunArgs),
    /// Poincaré surface of section from a seed lattice.
    Psection(RunArgs),
    /// Compare variable-time descriptor maxima with orbit crossings.
    ValidateNhim(RunArgs),
    /// List the bundled recipes.
    Recipes,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["config", "recipe"])))]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Bundled configuration by name.
    #[arg(long, value_name = "NAME")]
    recipe: Option<String>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Output directory, overriding the configuration.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Validate the configuration, print it with defaults filled in and exit.
    #[arg(long)]
    seed_only: bool,
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if cause.is::<NumericalFailure>() {
            return 3;
        }
        if let Some(pe) = cause.downcast_ref::<phasescope::Error>() {
            return match pe {
                phasescope::Error::Io(_)
                | phasescope::Error::Json(_)
                | phasescope::Error::Csv(_)
                | phasescope::Error::Format(_) => 1,
                _ if pe.is_config() => 2,
                _ => 3,
            };
        }
    }
    1
}

fn execution(workers: Option<usize>) -> Execution {
    if workers == Some(1) {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    #[cfg(feature = "parallel")]
    if let Some(n) = workers {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
        return Ok(pool.install(f));
    }
    let _ = workers;
    Ok(f())
}

fn run(cli: Cli) -> Result<()> {
    let (command, args) = match cli.command {
        Cmd::LdMap(a) => (Command::LdMap, a),
        Cmd::PoFamily(a) => (Command::PoFamily, a),
        Cmd::Manifolds(a) => (Command::Manifolds, a),
        Cmd::Psection(a) => (Command::Psection, a),
        Cmd::ValidateNhim(a) => (Command::ValidateNhim, a),
        Cmd::Recipes => {
            for r in recipes::RECIPES {
                println!("{:<14} {}", r.name, r.command.name());
            }
            return Ok(());
        }
    };
    let mut cfg = match (&args.config, &args.recipe) {
        (Some(path), _) => RunConfig::from_file(path)?,
        (None, Some(name)) => RunConfig::from_recipe(name, command)?,
        (None, None) => unreachable!("clap requires a source"),
    };
    if args.workers.is_some() {
        cfg.workers = args.workers;
    }
    if let Some(dir) = args.out {
        cfg.output_dir = dir;
    }
    let cfg = cfg.resolve(command)?;
    if args.seed_only {
        println!("{}", serde_json::to_string_pretty(&cfg)?);
        return Ok(());
    }
    let start = Instant::now();
    let out = with_workers(cfg.workers, || commands::run(command, &cfg, execution(cfg.workers)))??;
    let outputs = out.write(&cfg.output_dir)?;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: command.name(),
        config: cfg.clone(),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs,
        grids: out.grids.clone(),
        features: out.features.clone(),
    };
    manifest.write(&cfg.output_dir)?;
    for line in commands::summary(command, &out) {
        println!("{line}");
    }
    println!("wrote {} files to {}", manifest.outputs.len() + 1, cfg.output_dir.display());
    commands::ensure_no_failure(&out)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
