//! `roughlab run <config>` and `roughlab report <dir>`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use roughlab::scenario::{self, RunOptions, ScenarioConfig};
use roughlab::Error;

/// Worker-count override; never changes numeric output.
const WORKERS_VAR: &str = "ROUGHLAB_WORKERS";

#[derive(Parser)]
#[command(name = "roughlab", version, about = "Rough transport noise experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a TOML config (or a previous manifest.json).
    Run {
        config: PathBuf,
        /// Output directory, overriding the config's `output`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the check table and JSON summary of a finished run.
    Report {
        dir: PathBuf,
        /// Print only the JSON summary.
        #[arg(long)]
        json: bool,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Violation(_) | Error::BlowUp { .. } | Error::NotConverged { .. } => 2,
        Error::Config(_) | Error::InvalidInput(_) | Error::Io(_) => 1,
    }
}

fn workers() -> Result<Option<usize>, Error> {
    match std::env::var(WORKERS_VAR) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .map(Some)
            .ok_or_else(|| Error::Config(format!("{WORKERS_VAR} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn run(config: PathBuf, output: Option<PathBuf>) -> Result<u8, Error> {
    let mut cfg = ScenarioConfig::load(&config)?;
    if let Some(dir) = output {
        cfg.output = dir;
    }
    let summary = scenario::run(&cfg, &RunOptions { workers: workers()? })?;
    let report = scenario::report(&summary.dir)?;
    print!("{}", report.table);
    let failures = summary.failures();
    if failures.is_empty() {
        return Ok(0);
    }
    for c in failures {
        eprintln!("violated: {} ({})", c.name, c.row()[1]);
    }
    Ok(2)
}

fn report(dir: PathBuf, json: bool) -> Result<u8, Error> {
    let report = scenario::report(&dir)?;
    if !json {
        print!("{}", report.table);
    }
    println!("{}", serde_json::to_string_pretty(&report.json).expect("summary serializes"));
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, output } => run(config, output),
        Command::Report { dir, json } => report(dir, json),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
