use std::process::ExitCode;

use clap::Parser;
use lyap_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lyap: {e}");
            e.exit_code()
        }
    }
}
