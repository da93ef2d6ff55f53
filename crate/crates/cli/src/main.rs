//! `sinai`: simulate walks, locate valleys, verify bounds and run campaigns.
//!
//! Exit status: 0 success, 1 invalid input, 2 runtime failure, 3 a pass
//! criterion failed, 4 no basic valley was found.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Config;

#[derive(Debug, Parser)]
#[command(name = "sinai", version, about = "Random walk in random environment laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured top-level seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Run one walk; writes the local-time histogram and its statistics.
    Simulate,
    /// Locate the basic valley of one environment; writes it with the potential around it.
    Valley,
    /// Run the bound-verification suite.
    Verify,
    /// Run one experiment campaign.
    Experiment,
}

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Runtime(String),
    /// Outputs were written; some pass criterion failed.
    Verification(String),
    NoValley,
}

impl From<sinai_core::Error> for Failure {
    fn from(e: sinai_core::Error) -> Self {
        use sinai_core::Error::*;
        match e {
            InvalidDistribution(_) | InvalidParameter { .. } => Failure::Validation(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Runtime(_) => 2,
            Failure::Verification(_) => 3,
            Failure::NoValley => 4,
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let path = cli
        .config
        .ok_or_else(|| Failure::Validation("--config is required".into()))?;
    let mut cfg = Config::load(&path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(out) = cli.out {
        cfg.out = Some(out);
    }
    match cli.command {
        Command::Simulate => commands::simulate(&cfg),
        Command::Valley => commands::valley(&cfg),
        Command::Verify => commands::verify(&cfg),
        Command::Experiment => commands::experiment(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Validation(m) => eprintln!("error: {m}"),
                Failure::Runtime(m) => eprintln!("error: {m}"),
                Failure::Verification(m) => eprintln!("failed: {m}"),
                Failure::NoValley => eprintln!("no basic valley within the search cap"),
            }
            ExitCode::from(f.code())
        }
    }
}
