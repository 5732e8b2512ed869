use std::process::ExitCode;

use clap::Parser;
use gergm_cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match gergm_cli::run(&cli) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
