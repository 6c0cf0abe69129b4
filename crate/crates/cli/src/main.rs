//! `formdml`: estimate the causal effect of formation matchups on match
//! outcome differences via cross-fitted double machine learning.

mod commands;
mod config;
mod error;
mod heatmap;
mod tables;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "formdml",
    version,
    about = "Formation-effect estimation via categorical-treatment double machine learning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Normalize a fixture table into analysis rows plus a reject report
    Ingest(commands::ingest::IngestArgs),
    /// Generate a synthetic dataset with known causal structure
    Simulate(commands::simulate::SimulateArgs),
    /// Estimate the formation-effect matrix from an analysis table
    Estimate(commands::estimate::EstimateArgs),
    /// Descriptive tables and heatmap rendering
    Report(commands::report::ReportArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            std::process::exit(0);
        }
        Err(e) => {
            let first_line = e.to_string().lines().next().unwrap_or("bad arguments").to_string();
            eprintln!("error[E_USAGE]: {first_line}");
            std::process::exit(2);
        }
    };
    let result = match cli.command {
        Command::Ingest(args) => commands::ingest::run(args),
        Command::Simulate(args) => commands::simulate::run(args),
        Command::Estimate(args) => commands::estimate::run(args),
        Command::Report(args) => commands::report::run(args),
    };
    if let Err(e) = result {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
