use std::process::ExitCode;

use changeattr_cli::Cli;
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("changeattr: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
