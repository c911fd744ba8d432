mod args;
mod lidar;
mod output;
mod separation;
mod tomo;
mod track;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "infotrack", version, about = "Bounded information tracking benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Overlap, separation and droplet density between two Gaussians.
    Separation(separation::Args),
    /// LiDAR ghost-cluster Monte Carlo: tracker vs. baseline.
    BenchLidar(lidar::Args),
    /// Filter a tick series (CSV or synthetic) with both estimators.
    TrackCsv(track::Args),
    /// Single-qubit reconstruction: linear inversion and bounded estimate.
    Tomo(tomo::Args),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Separation(a) => separation::run(a),
        Command::BenchLidar(a) => lidar::run(a),
        Command::TrackCsv(a) => track::run(a),
        Command::Tomo(a) => tomo::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
