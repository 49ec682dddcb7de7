//! Experiment driver for the hyperkähler/Fueter numerical laboratory.
//!
//! Every subcommand reads one flat key=value config, runs a battery or a
//! solve, writes its artifacts (binary snapshots, CSV tables, JSON reports)
//! under the output directory, and prints one line per check. Exit code 0
//! means everything passed, 2 means the run completed but some check
//! failed (the report is still on disk), 1 means the run itself could not
//! be carried out.

mod aggregate;
mod common;
mod config;
mod estimates_cmd;
mod flow;
mod geometry;
mod solve;
mod sweep;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "crpslab", version, about = "hyperkähler geometry & Fueter BVP laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the key=value experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `out` key).
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed (overrides the config's `seed` key).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Metric/complex-structure invariant battery on random samples.
    GeometryCheck(RunArgs),
    /// Harmonic-map heat flow on the torus; emits the map and its lift.
    HarmonicFlow(RunArgs),
    /// Newton–Krylov solve of the first-order boundary value problem.
    FueterSolve(RunArgs),
    /// Confinement estimate battery on a stored cylinder snapshot.
    Estimates(RunArgs),
    /// Amplitude ladder for the sup Φ exponent-law study.
    Sweep(RunArgs),
    /// Aggregate JSON reports in a directory into a CSV + plot script.
    Report(RunArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version are not errors; anything else is operational.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    let (name, args) = match &cli.cmd {
        Command::GeometryCheck(a) => ("geometry-check", a),
        Command::HarmonicFlow(a) => ("harmonic-flow", a),
        Command::FueterSolve(a) => ("fueter-solve", a),
        Command::Estimates(a) => ("estimates", a),
        Command::Sweep(a) => ("sweep", a),
        Command::Report(a) => ("report", a),
    };

    let outcome = common::RunContext::new(name, args).and_then(|ctx| {
        let passed = match cli.cmd {
            Command::GeometryCheck(_) => geometry::run(&ctx)?,
            Command::HarmonicFlow(_) => flow::run(&ctx)?,
            Command::FueterSolve(_) => solve::run(&ctx)?,
            Command::Estimates(_) => estimates_cmd::run(&ctx)?,
            Command::Sweep(_) => sweep::run(&ctx)?,
            Command::Report(_) => aggregate::run(&ctx)?,
        };
        ctx.config.finish()?;
        Ok(passed)
    });

    std::process::exit(match outcome {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    });
}
