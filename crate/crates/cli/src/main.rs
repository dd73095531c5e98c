mod args;
mod run;
mod spec;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::run::CliError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Cp(a) => run::cp(a),
        Command::Icp(a) => run::icp(a),
        Command::Rrcm(a) => run::rrcm(a),
        Command::Venn(a) => run::venn(a),
        Command::Meta(a) => run::meta(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Data(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(message)) => {
            eprintln!("usage error: {message}");
            ExitCode::from(2)
        }
    }
}
