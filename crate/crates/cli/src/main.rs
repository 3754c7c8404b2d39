use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod config;
mod output;

use args::{Cli, Command};
use commands::Context;
use config::FileConfig;
use output::{Failure, Report, Sink};

fn run(cli: &Cli) -> Result<Report, Failure> {
    let config = FileConfig::load(cli.config.as_deref())?;
    let ctx = Context {
        seed: cli.seed.or(config.seed).unwrap_or(0),
        config,
    };
    match &cli.command {
        Command::Cluster(a) => commands::cluster::run(a, &ctx),
        Command::Solve(a) => commands::solve::run(a, &ctx),
        Command::LlmSchedule(a) => commands::llm_schedule::run(a, &ctx),
        Command::Evaluate(a) => commands::evaluate::run(a, &ctx),
        Command::IngestCheck(a) => commands::ingest_check::run(a, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let sink = Sink {
        json: cli.json,
        output: cli.output.clone(),
    };
    match run(&cli).and_then(|report| sink.deliver(&report).map(|()| report.code)) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code)
        }
    }
}
