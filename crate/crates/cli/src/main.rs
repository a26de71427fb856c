//! `cloudbench`: batch front-end for the elasticity, isolation, availability and
//! risk metrics and for the simulation harness.

mod availability;
mod elasticity;
mod error;
mod input;
mod isolation;
mod risk;
mod sim;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Debug, Parser)]
#[command(name = "cloudbench", version, about = "Cloud benchmark metrics from traces and simulations")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the scenario seed of `sim`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Elasticity metrics of demand/supply traces, with an optional ranking.
    Elasticity(elasticity::ElasticityArgs),
    /// Rank platforms from precomputed elasticity metrics.
    Rank(elasticity::RankArgs),
    /// Performance-isolation metrics from an isolation curve and/or QoS observations.
    Isolation(isolation::IsolationArgs),
    /// SLA strictness, and availability and adherence of a sample log.
    Availability(availability::AvailabilityArgs),
    /// Operational risk of provisioned/demanded/used traces.
    Risk(risk::RiskArgs),
    /// Run a simulation scenario and write its traces next to the report.
    Sim(sim::SimArgs),
}

/// A command result in both output formats.
pub struct Report {
    pub json: serde_json::Value,
    pub table: String,
}

fn run(cli: &Cli) -> Result<Report> {
    match &cli.command {
        Command::Elasticity(a) => elasticity::run(a),
        Command::Rank(a) => elasticity::rank(a),
        Command::Isolation(a) => isolation::run(a),
        Command::Availability(a) => availability::run(a),
        Command::Risk(a) => risk::run(a),
        Command::Sim(a) => sim::run(a, cli.out.as_deref(), cli.seed),
    }
}

fn emit(cli: &Cli, report: &Report) -> Result<()> {
    let text = match cli.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report.json).map_err(|e| CliError::Other(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Table => report.table.clone(),
    };
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => std::io::stdout().lock().write_all(text.as_bytes()).map_err(|e| CliError::Other(e.to_string())),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli).and_then(|r| emit(&cli, &r)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
