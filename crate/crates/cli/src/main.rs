//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (malformed or
//! inconsistent input), 3 environment error (I/O, network).

mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{AnalyzeCommand, Cli, Command};
use commands::Context;
use config::Config;

/// A well-formed invocation with an invalid flag value.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

const USAGE: u8 = 1;
const DATA: u8 = 2;
const ENVIRONMENT: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return USAGE;
        }
        if let Some(e) = cause.downcast_ref::<stereoreader::Error>() {
            return if e.is_data_error() { DATA } else { ENVIRONMENT };
        }
    }
    ENVIRONMENT
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let jobs = cli.jobs.or(config.jobs).unwrap_or(1);
    if jobs == 0 {
        return Err(Usage("--jobs must be at least 1".into()).into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    let ctx = Context { config, seed: cli.seed };
    match &cli.command {
        Command::Parse(a) => commands::parse(&ctx, a),
        Command::Canonicalize(a) => commands::canonicalize(a),
        Command::Build(a) => commands::build(&ctx, a),
        Command::Stats(a) => commands::stats(a),
        Command::Train(a) => commands::train_cmd(&ctx, a),
        Command::Predict(a) => commands::predict(a),
        Command::Prompt(a) => commands::prompt(&ctx, a),
        Command::Infer(a) => commands::infer(&ctx, a),
        Command::Ingest(a) => commands::ingest(a),
        Command::Evaluate(a) => commands::evaluate(&ctx, a),
        Command::Analyze(AnalyzeCommand::DistinctWords(a)) => commands::distinct(a),
        Command::Analyze(AnalyzeCommand::Arc(a)) => commands::arc(a),
        Command::Analyze(AnalyzeCommand::Subversion(a)) => commands::subversion(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(USAGE),
            };
        }
    };
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
