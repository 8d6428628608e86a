use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = envyfix::commands::Cli::parse();
    ExitCode::from(envyfix::commands::run(cli))
}
