use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod failure;
mod output;
mod run;
mod validate;

use failure::Failure;

/// Non-Markovian Mpemba analysis of quantum dots coupled to fermionic reservoirs.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One dot, one bath: occupation dynamics, fast state and report.
    SingleDot { config: PathBuf },
    /// Two dots between two baths: trace distances, currents and report.
    DoubleDot { config: PathBuf },
    /// One analysis per point of the [sweep] grid.
    Sweep { config: PathBuf },
    /// Finite-time switch-on of the couplings.
    Quench { config: PathBuf },
    /// Invariant and oracle checks on the configured model.
    Validate { config: PathBuf },
}

fn execute(command: &Command) -> Result<String, Failure> {
    let path = match command {
        Command::SingleDot { config }
        | Command::DoubleDot { config }
        | Command::Sweep { config }
        | Command::Quench { config }
        | Command::Validate { config } => config,
    };
    let loaded = config::load(path)?;
    match command {
        Command::SingleDot { .. } => run::single_dot(&loaded),
        Command::DoubleDot { .. } => run::double_dot(&loaded),
        Command::Sweep { .. } => run::sweep(&loaded),
        Command::Quench { .. } => run::quench(&loaded),
        Command::Validate { .. } => {
            let (report, summary) = validate::validate(&loaded)?;
            if report.pass {
                Ok(summary)
            } else {
                println!("{summary}");
                let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
                Err(Failure::Validation(failed.join(", ")))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
