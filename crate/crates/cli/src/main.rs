use std::io;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pbk_cli::commands::{AnalyticArgs, EstimateArgs, SimulateArgs};
use pbk_cli::{cmd_analytic, cmd_estimate, cmd_simulate, CliError};
use pbk_cli::{EXIT_COMPARISON_FAILED, EXIT_ERROR, EXIT_OK};

/// Probabilistic Byzantine cheater detection: closed forms and simulation.
#[derive(Parser)]
#[command(name = "pbk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form who-knows-whom matrix after d steps.
    Analytic(AnalyticArgs),
    /// Run one simulation and write its trace.
    Simulate(SimulateArgs),
    /// Monte Carlo estimate compared with the closed form.
    Estimate(EstimateArgs),
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let mut stdout = io::stdout().lock();
    match cli.command {
        Command::Analytic(args) => cmd_analytic(&args, &mut stdout).map(|_| EXIT_OK),
        Command::Simulate(args) => cmd_simulate(&args, &mut stdout).map(|_| EXIT_OK),
        Command::Estimate(args) => {
            let outcome = cmd_estimate(&args, &mut stdout)?;
            Ok(if outcome.all_pass() {
                EXIT_OK
            } else {
                EXIT_COMPARISON_FAILED
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
