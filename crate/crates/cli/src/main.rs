//! `stostab`: stationary densities and zero-noise limits on the circle and torus.
//!
//! Exit status: 0 when every check passed, 1 when a check failed, 2 on errors
//! (bad config, solver failure).

mod config;
mod output;
mod run;

use clap::{Parser, Subcommand as ClapSubcommand};
use config::{Overrides, Subcommand};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "stostab", version, about = "Stationary densities and zero-noise limits on the circle and torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Stationary density on the circle for each eps.
    Solve(Overrides),
    /// Residual norms, certificates and fitted orders over an eps family.
    Converge(Overrides),
    /// Ensemble occupation measure against the stationary density.
    Simulate(Overrides),
    /// Gibbs densities and concentration on the minima of a potential.
    Gradflow(Overrides),
    /// Uniform stationarity and rigidity for volume-preserving torus flows.
    Torus(Overrides),
    /// List the registered problem families.
    Families,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (sub, ov) = match cli.command {
        Command::Solve(o) => (Subcommand::Solve, o),
        Command::Converge(o) => (Subcommand::Converge, o),
        Command::Simulate(o) => (Subcommand::Simulate, o),
        Command::Gradflow(o) => (Subcommand::Gradflow, o),
        Command::Torus(o) => (Subcommand::Torus, o),
        Command::Families => {
            for (name, desc) in config::FAMILIES {
                println!("{name:<22} {desc}");
            }
            return ExitCode::SUCCESS;
        }
    };
    let cfg = match config::resolve(sub, &ov) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match run::run(&cfg) {
        Ok(true) => {
            println!("{}: all checks passed ({})", sub.name(), cfg.out.display());
            ExitCode::SUCCESS
        }
        Ok(false) => {
            println!("{}: some checks FAILED, see {}/summary.json", sub.name(), cfg.out.display());
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
