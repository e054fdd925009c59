//! `hdboot` command-line interface.

mod args;
mod error;
mod input;
mod output;
mod simulate;
mod test_cmd;
mod validate;
mod weights;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads(cli.threads).and_then(|()| match cli.command {
        Command::Test(args) => test_cmd::run(args),
        Command::Simulate(args) => simulate::run(args),
        Command::Validate(args) => validate::run(args),
        Command::Weights(args) => weights::run(args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if !matches!(err, CliError::ChecksFailed) {
                eprintln!("error: {err}");
            }
            ExitCode::from(err.exit_code())
        }
    }
}

/// `THREADS` in the environment takes precedence over `--threads`.
fn configure_threads(flag: Option<usize>) -> Result<(), CliError> {
    let threads = match std::env::var("THREADS") {
        Ok(value) => Some(
            value
                .trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("THREADS must be a positive integer, got {value:?}")))?,
        ),
        Err(_) => flag,
    };
    match threads {
        Some(0) => Err(CliError::Usage("thread count must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string())),
        None => Ok(()),
    }
}
