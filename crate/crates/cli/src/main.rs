use std::panic;
use std::process::ExitCode;

use clap::Parser;
use rcxr_cli::error::exit;
use rcxr_cli::{describe, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(_)) => exit::OK,
        Ok(Err(e)) => {
            eprintln!("error: {}", describe(&e));
            e.exit_code()
        }
        Err(_) => exit::INTERNAL,
    };
    ExitCode::from(code as u8)
}
