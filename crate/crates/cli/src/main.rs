//! `strongcoord`: batch runs of the region solver, the binning codes and the property checks.

mod commands;
mod config;
mod error;
mod output;

use clap::{Parser, Subcommand, ValueEnum};
use error::CliError;
use output::{Format, Sink};
use std::path::PathBuf;
use std::process::ExitCode;
use strongcoord::verify::EvalMode;

#[derive(Parser, Debug)]
#[command(name = "strongcoord", version, about = "Secure strong coordination over wiretap channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimal common-randomness rate from the inner bound and, on more capable channels, the corollary.
    Region(Args),
    /// Build, fix and evaluate a code at each blocklength.
    Simulate(Args),
    /// Run the lemma checks and the extraction sweep.
    Verify(Args),
    /// Evaluate codes over a grid of rates and blocklengths.
    Sweep(Args),
}

#[derive(clap::Args, Debug)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "both")]
    format: Format,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Deliberately break a primitive to exercise the failure path.
    #[arg(long, value_enum, hide = true)]
    inject_fault: Option<Fault>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Exact,
    Montecarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    /// Total variation without the factor one half.
    BrokenTv,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (Command::Region(a) | Command::Simulate(a) | Command::Verify(a) | Command::Sweep(a)) = &cli.command;
    let mut cfg = config::load(&a.config)?;
    if let Some(s) = a.seed {
        cfg.run.seed = s;
    }
    if let Some(m) = a.mode {
        cfg.run.mode = match m {
            ModeArg::Exact => EvalMode::Exact,
            ModeArg::Montecarlo => EvalMode::MonteCarlo,
        };
    }
    let sink = Sink::new(&a.out, a.format)?;
    match cli.command {
        Command::Region(_) => commands::region(&cfg, &sink),
        Command::Simulate(_) => commands::simulate(&cfg, &sink),
        Command::Verify(ref a) => commands::verify(&cfg, &sink, a.inject_fault),
        Command::Sweep(_) => commands::sweep(&cfg, &sink),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("strongcoord: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
