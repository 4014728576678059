use std::process::ExitCode;

use clap::Parser;
use imred_cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error_class={} {msg}", e.class());
            ExitCode::FAILURE
        }
    }
}
