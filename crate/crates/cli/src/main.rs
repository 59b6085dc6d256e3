//! `ramanprop` command-line tool.
//!
//! ```text
//! ramanprop <chi-scan|propagate|analyze|oracle> --config run.toml [--out dir]
//!           [--seed n] [--order 2|4] [--direct-chi] [--input snapshots/]
//! ```
//!
//! Exit status is 0 on success, 1 for configuration or input errors and 2 for
//! numerical failures. `RAMANPROP_THREADS` sets the worker count.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use ramanprop::io::{run_subcommand, RunFlags, Subcommand};
use ramanprop::solver::threads_from_env;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    ChiScan,
    Propagate,
    Analyze,
    Oracle,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::ChiScan => Subcommand::ChiScan,
            Command::Propagate => Subcommand::Propagate,
            Command::Analyze => Subcommand::Analyze,
            Command::Oracle => Subcommand::Oracle,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ramanprop",
    version,
    about = "Probe-beam propagation through a Raman-driven vapor"
)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "ramanprop-out")]
    out: PathBuf,
    /// Overrides [run] seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides [solver] order.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(["2", "4"]))]
    order: Option<String>,
    /// Evaluate the susceptibility directly instead of from a table.
    #[arg(long)]
    direct_chi: bool,
    /// Snapshot directory for `analyze` (default: <out>/snapshots).
    #[arg(long)]
    input: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let flags = RunFlags {
        seed: cli.seed,
        order: cli.order.map(|o| o.parse().expect("validated by clap")),
        direct_chi: cli.direct_chi,
        input: cli.input,
        threads: threads_from_env(),
    };
    let sub = Subcommand::from(cli.command);
    match run_subcommand(sub, &cli.config, &cli.out, &flags) {
        Ok(manifest) => {
            for out in &manifest.outputs {
                println!("{}  {}", out.sha256, out.path);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ramanprop {}: {e}", sub.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
