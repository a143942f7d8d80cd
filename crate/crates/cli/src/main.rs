mod analyze;
mod config;
mod error;
mod output;
mod qsd;
mod report;
mod simulate;

use clap::{Parser, Subcommand};

/// Absolute concentration robustness and extinction in reaction networks.
#[derive(Parser, Debug)]
#[command(name = "acr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Structural invariants, ACR and absorption checks
    Analyze(analyze::AnalyzeArgs),
    /// Stochastic simulation and Monte Carlo estimators
    Simulate(simulate::SimulateArgs),
    /// Quasi-stationary distribution
    Qsd(qsd::QsdArgs),
    /// Merge JSON artifacts into one report
    Report(report::ReportArgs),
}

fn main() {
    let cli = Cli::parse();
    let r = match &cli.command {
        Command::Analyze(a) => analyze::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Qsd(a) => qsd::run(a),
        Command::Report(a) => report::run(a),
    };
    if let Err(e) = r {
        eprintln!("{}", e);
        std::process::exit(e.exit_code());
    }
}
