//! `gkcm`: build consistency hypergraphs from measurements, find maximum
//! cliques, simulate worlds and score selections.

mod bench;
mod build;
mod error;
mod eval;
mod hcq;
mod records;
mod simulate;
mod solve;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "gkcm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Find a maximum clique of a hypergraph file.
    Solve(solve::Args),
    /// Build a consistency hypergraph from a measurement file.
    Build(build::Args),
    /// Generate a synthetic world or planted-clique graph.
    Simulate(simulate::Args),
    /// Timing sweeps as CSV.
    Bench(bench::Args),
    /// Score a selection against a truth file.
    Eval(eval::Args),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => solve::run(a),
        Command::Build(a) => build::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Bench(a) => bench::run(a),
        Command::Eval(a) => eval::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gkcm: {e}");
            e.exit_code()
        }
    }
}
