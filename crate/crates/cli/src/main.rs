mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::UsageError;

const EXIT_USAGE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;

/// I/O and usage failures exit with 2, everything else with 3.
fn exit_code(err: &anyhow::Error) -> u8 {
    let io_or_usage = err
        .chain()
        .any(|e| e.is::<std::io::Error>() || e.is::<UsageError>() || e.is::<ConfigError>());
    if io_or_usage {
        EXIT_USAGE
    } else {
        EXIT_VALIDATION
    }
}

#[derive(Debug, thiserror::Error)]
#[error("config: {0:#}")]
struct ConfigError(anyhow::Error);

fn run(cli: Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Infer(a) => commands::infer(a),
        Command::SweepQuant(a) => commands::sweep_quant(a),
        Command::SweepReuse(a) => commands::sweep_reuse(a),
        Command::CompareModes(a) => commands::compare_modes(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::GenFixtures(a) => commands::gen_fixtures(a),
    }
}

fn main() -> ExitCode {
    let argv = match config::merge(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {:#}", ConfigError(e));
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let name = cli.command.name();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {name}: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
