//! `qswlab`: batch front end for flows, samplers, variance studies, bound
//! audits and path counts.

mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::Parser;

use config::{Cli, ExperimentConfig, Format};
use error::CliError;

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = ExperimentConfig::resolve(cli.command, cli.common)?;
    let doc = commands::run(&cfg)?;
    output::emit(&doc, cfg.format == Format::Json, cfg.out.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qswlab {name}: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
