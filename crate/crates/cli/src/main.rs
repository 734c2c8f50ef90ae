//! `magnetovar <command> --config <path> [--out <dir>] [--seed <n>]`
//!
//! Exit codes: 0 success, 1 validation failure, 2 configuration error,
//! 3 solver non-convergence, 4 I/O error.

mod commands;
mod config;
mod error;
mod output;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{Command, RunConfig};
use error::CliError;
use output::Outputs;

#[derive(Debug, Parser)]
#[command(name = "magnetovar", version, about = "Stray-field solvers, micromagnetic minimization and thin-shell studies")]
struct Cli {
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: `output.dir` from the config, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = RunConfig::load(&cli.config)?;
    if let Some(c) = cfg.command {
        if c != cli.command {
            return Err(CliError::Config(format!("config is for {c:?}, not {:?}", cli.command)));
        }
    }
    let seed = cli.seed.unwrap_or(cfg.seed);
    let dir = cli.out.clone().or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let mut out = Outputs::prepare(&dir)?;

    let result = match cli.command {
        Command::Validate => commands::validate(&cfg, seed, &mut out),
        Command::Demag => commands::demag(&cfg, &mut out),
        Command::Solve => commands::solve(&cfg, seed, &mut out),
        Command::ShellStudy => commands::shell_study(&cfg, &mut out),
        Command::Oracle => commands::oracle(&cfg, seed, &mut out),
    };
    match result {
        Ok(()) => {
            out.commit();
            Ok(())
        }
        // a failed check still leaves its complete report behind
        Err(e @ CliError::Validation(_)) => {
            out.commit();
            Err(e)
        }
        Err(e) => Err(e),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
