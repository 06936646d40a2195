mod args;
mod commands;
mod config;
mod error;
mod scoring;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use config::RunConfig;
use error::{CliError, CliResult};

const THREADS_ENV: &str = "SURVBOOST_THREADS";

fn init_threads(flag: Option<usize>, cfg: &RunConfig) -> CliResult<()> {
    let n = match flag.or(cfg.threads) {
        Some(n) => n,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("{THREADS_ENV}={v:?} is not a thread count")))?,
            Err(_) => return Ok(()),
        },
    };
    if n == 0 {
        return Err(CliError::Usage("thread count must be >= 1".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    init_threads(cli.threads, &cfg)?;
    let seed = cfg.seed(cli.seed);
    match &cli.command {
        Command::Synth(a) => commands::synth::run(a, &cfg, seed),
        Command::Train(a) => commands::train::run(a, &cfg, seed),
        Command::Predict(a) => commands::predict::run(a),
        Command::Evaluate(a) => commands::evaluate::run(a, &cfg),
        Command::Benchmark(a) => commands::benchmark::run(a, &cfg, seed),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
