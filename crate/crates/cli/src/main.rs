use std::process::ExitCode;

use clap::Parser;
use relbc_cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(relbc_cli::run(&cli))
}
