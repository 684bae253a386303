use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mcac::config::SimConfig;
use mcac::experiments;
use mcac::Error;

/// Mass-conserving Allen–Cahn experiments.
#[derive(Parser)]
#[command(name = "mcac", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quadrature check of the standing-wave constants.
    ProfileConstants,
    /// Run one simulation and write its time series, snapshots and curves.
    Simulate { config: PathBuf },
    /// Error against the sharp-interface flow over a decreasing list of eps.
    Converge {
        config: PathBuf,
        /// Comma-separated, strictly decreasing.
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
    },
    /// Volume drift of the local and nonlocal multipliers from identical data.
    CompareMultipliers { config: PathBuf },
    /// Radius drift of a circle under the tracker and the phase field.
    Equilibrium { config: PathBuf },
}

fn verdict(passed: bool) -> ExitCode {
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config { .. } | Error::InvalidArgument(_) | Error::Format { .. } | Error::Io(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let load = |p: &PathBuf| SimConfig::load(p);
    let result = match cli.command {
        Command::ProfileConstants => {
            let r = experiments::cmd_profile_constants();
            print!("{r}");
            return verdict(r.passed());
        }
        Command::Simulate { config } => load(&config).and_then(|c| experiments::cmd_simulate(&c)).map(|r| {
            println!("{r}");
            r.passed()
        }),
        Command::Converge { config, eps } => load(&config).and_then(|c| experiments::cmd_converge(&c, &eps)).map(|r| {
            println!("{r}");
            r.passed()
        }),
        Command::CompareMultipliers { config } => {
            load(&config).and_then(|c| experiments::cmd_compare_multipliers(&c)).map(|r| {
                println!("{r}");
                r.passed()
            })
        }
        Command::Equilibrium { config } => load(&config).and_then(|c| experiments::cmd_equilibrium(&c)).map(|r| {
            println!("{r}");
            r.passed()
        }),
    };
    match result {
        Ok(passed) => verdict(passed),
        Err(e) => fail(e),
    }
}
