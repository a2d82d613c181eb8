use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use skpk_harness::cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let started = Instant::now();
    let outcome = run(cli);
    log::info!("elapsed {:.3?}", started.elapsed());
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
