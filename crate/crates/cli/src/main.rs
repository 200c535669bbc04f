//! `riesz-kinetic`: run, check and verify Vlasov–Riesz(–Fokker–Planck)
//! problems from a TOML config.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical halt,
//! 3 identity check failed.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "riesz-kinetic", version, about = "Phase-space solver and blow-up checker for Vlasov equations with Riesz interactions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output.directory`).
    #[arg(long, value_name = "DIR")]
    pub output: Option<PathBuf>,
    /// Seed for randomized initial data (overrides `seed`).
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Dotted-path override, e.g. `integrator.dt=5e-4`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve the configured initial datum and write diagnostics.
    Simulate(#[command(flatten)] Common),
    /// Evaluate the blow-up sufficient conditions on the initial datum.
    CheckBlowup(#[command(flatten)] Common),
    /// Tabulate the Grönwall upper bound for h'' + c1 h' <= c2 h + c3.
    Gronwall(commands::GronwallArgs),
    /// Run the energy and virial identity checks.
    VerifyIdentities(#[command(flatten)] Common),
    /// Convert between multiplier and power-law kernel forms.
    ConvertKernel(commands::ConvertArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(c) => commands::simulate(&c),
        Command::CheckBlowup(c) => commands::check_blowup(&c),
        Command::Gronwall(a) => commands::gronwall(&a),
        Command::VerifyIdentities(c) => commands::verify_identities(&c),
        Command::ConvertKernel(a) => commands::convert_kernel(&a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code as u8)
        }
    }
}
