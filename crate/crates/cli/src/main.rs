//! `lambda1`: runs one experiment per invocation and writes its outputs and a
//! run manifest to `--out`.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::CommandConfig;
use crate::error::CliError;
use crate::manifest::{run_atomic, RunManifest};

#[derive(Parser)]
#[command(name = "lambda1", version, about = "First Schrodinger eigenvalue experiments on sphere and torus meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; must be absent or empty.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print the default configuration of the command and exit.
    #[arg(long, global = true)]
    print_defaults: bool,
    /// Override every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Spectrum and eigenfunctions of -Laplace + V.
    Eigen,
    /// Indefiniteness test and sum-of-squares certificate.
    ExtremalCheck,
    /// Mobius extremal potentials along a dilation family.
    MobiusFamily,
    /// Dilation family with weak pairings and bubble diagnostics.
    Concentrate,
    /// Ascent of lambda_1 from a starting potential.
    Maximize,
    /// Hersch balancing and the 8 pi upper bound.
    Hersch,
    /// Bubble diagnostics of an energy density.
    Bubble,
    /// Mesh summary and cache file.
    Mesh,
}

fn load<C: CommandConfig>(path: Option<&Path>, seed: Option<u64>) -> Result<C, CliError> {
    let mut cfg: C = match path {
        None => C::default(),
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?
        }
    };
    if let Some(s) = seed {
        cfg.override_seed(s);
    }
    Ok(cfg)
}

fn execute<C: CommandConfig>(
    cli: &Cli,
    name: &str,
    body: impl FnOnce(&C, &Path) -> Result<Option<String>, CliError> + Send,
) -> Result<(), CliError> {
    if cli.print_defaults {
        println!("{}", serde_json::to_string_pretty(&C::default())?);
        return Ok(());
    }
    let out = cli.out.as_deref().ok_or_else(|| CliError::config("--out is required"))?;
    let parsed = load::<C>(cli.config.as_deref(), cli.seed);
    let value = match &parsed {
        Ok(c) => serde_json::to_value(c)?,
        Err(_) => serde_json::Value::Null,
    };
    let manifest = run_atomic(out, RunManifest::new(name, value), |dir| {
        let cfg = parsed?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads())
            .build()
            .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
        pool.install(|| body(&cfg, dir))
    })?;
    eprintln!("{name}: wrote {} files to {}", manifest.outputs.len() + 1, out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eigen => execute(&cli, "eigen", commands::eigen),
        Command::ExtremalCheck => execute(&cli, "extremal-check", commands::extremal_check),
        Command::MobiusFamily => execute(&cli, "mobius-family", |c, o| commands::family(c, o, false)),
        Command::Concentrate => execute(&cli, "concentrate", |c, o| commands::family(c, o, true)),
        Command::Maximize => execute(&cli, "maximize", commands::maximize),
        Command::Hersch => execute(&cli, "hersch", commands::hersch),
        Command::Bubble => execute(&cli, "bubble", commands::bubble),
        Command::Mesh => execute(&cli, "mesh", commands::mesh),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
