//! `superpos`: rate regions, theorem checks and codebook simulations for
//! superposition coding over two-receiver broadcast channels.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error, 3 internal
//! invariant violation.

mod config;
mod demo;
mod error;
mod region;
mod simulate;
mod svg;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use superpos::search::init_workers_from_env;

#[derive(Parser, Debug)]
#[command(name = "superpos", version, about = "Superposition coding rate regions for two-receiver broadcast channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Region of each distribution document, plus optional sweeps, as a document, SVG and CSV.
    Region(region::RegionArgs),
    /// Checks that every heterogeneous region lies inside a homogeneous one over a channel corpus.
    VerifyTheorem(verify::VerifyArgs),
    /// Monte Carlo error rates of random codebooks.
    Simulate(simulate::SimulateArgs),
    /// The binary vector channel where homogeneous coding is strictly better.
    DemoVectorBc(demo::DemoArgs),
}

fn main() -> ExitCode {
    init_workers_from_env();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Region(a) => region::run(a),
        Command::VerifyTheorem(a) => verify::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::DemoVectorBc(a) => demo::run(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("superpos: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
