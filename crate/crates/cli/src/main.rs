//! `dgpe` — reproducible runs of the dipolar Gross-Pitaevskii ground-state
//! solver and its verification campaigns.
//!
//! Subcommands: `constants` (well geometry and regime checks), `wp` (radial
//! profile oracle), `groundstate` (constrained minimization), `sweep`
//! (vanishing-mass asymptotics), `evolve` (split-step time evolution),
//! `stability` (orbital stability probe) and `report` (claim table from a
//! manifest).  Every run writes its artifacts atomically plus a manifest
//! with content hashes; exit status is 0 only when all claim checks of the
//! command pass.

mod commands;
mod config;
mod manifest;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "dgpe", version, about = "Dipolar Gross-Pitaevskii ground states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct CommonArgs {
    /// JSON configuration file (a manifest replays its embedded config)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for artifacts
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output formats (comma separated subset of json,csv,bin)
    #[arg(long, global = true, value_delimiter = ',')]
    format: Option<Vec<String>>,
    /// Reproducibility mode: pin the job count to one
    #[arg(long, global = true)]
    repro: bool,
    /// Concurrent jobs for sweep entries and stability trials
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for random initializations and perturbations
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
struct InstanceArgs {
    /// Quartic coupling
    #[arg(long, allow_negative_numbers = true)]
    lambda1: Option<f64>,
    /// Dipolar coupling
    #[arg(long, allow_negative_numbers = true)]
    lambda2: Option<f64>,
    /// Attractive p-power coupling (negative)
    #[arg(long, allow_negative_numbers = true)]
    lambda3: Option<f64>,
    /// Exponent in (2, 10/3)
    #[arg(long, allow_negative_numbers = true)]
    p: Option<f64>,
    /// Mass (L2 norm of the state)
    #[arg(long, allow_negative_numbers = true)]
    mass: Option<f64>,
    /// Mass as a fraction of the threshold c*
    #[arg(long, allow_negative_numbers = true)]
    mass_frac: Option<f64>,
}

#[derive(Debug, Clone, Args)]
struct GridArgs {
    /// Points per axis (even, at least 8)
    #[arg(long)]
    n: Option<usize>,
    /// Cubic box side length (derived from the instance scale when omitted)
    #[arg(long = "box", allow_negative_numbers = true)]
    box_len: Option<f64>,
}

#[derive(Debug, Clone, Args)]
struct SolverArgs {
    /// Convergence tolerance (applies to both the residual and Pohozaev tests)
    #[arg(long, allow_negative_numbers = true)]
    tol: Option<f64>,
    /// Separate Pohozaev tolerance
    #[arg(long, allow_negative_numbers = true)]
    tol_p: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Initial guess: vc (scalar reference), random, or file
    #[arg(long)]
    init: Option<String>,
    /// Snapshot path for --init file
    #[arg(long)]
    init_file: Option<PathBuf>,
    /// Disable the Helmholtz preconditioner (plain residual steps)
    #[arg(long)]
    no_precondition: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Derived constants, well radii and regime checks for an instance
    Constants {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        instance: InstanceArgs,
    },
    /// Radial profile oracle: solve the limit-profile equation
    Wp {
        #[command(flatten)]
        common: CommonArgs,
        /// Exponent (defaults to 3)
        #[arg(long, allow_negative_numbers = true)]
        p: Option<f64>,
        /// Initial truncation radius (auto-doubled)
        #[arg(long, allow_negative_numbers = true)]
        r_max: Option<f64>,
        /// Residual acceptance tolerance
        #[arg(long, allow_negative_numbers = true)]
        tol: Option<f64>,
    },
    /// Ground state by projected gradient flow in the well
    Groundstate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Vanishing-mass sweep in rescaled coordinates
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Comma-separated masses (defaults to c*/2^k)
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        masses: Option<Vec<f64>>,
        /// Number of default masses
        #[arg(long)]
        mass_count: Option<usize>,
    },
    /// Split-step time evolution
    Evolve {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Horizon
        #[arg(long, allow_negative_numbers = true)]
        t_final: Option<f64>,
        /// Time step
        #[arg(long, allow_negative_numbers = true)]
        dt: Option<f64>,
        /// Initial state snapshot (defaults to a fresh ground state)
        #[arg(long)]
        psi0: Option<PathBuf>,
        /// Steps between samples
        #[arg(long)]
        sample_every: Option<usize>,
    },
    /// Orbital stability probe around a fresh ground state
    Stability {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Comma-separated excursion sizes (relative to the mass)
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        eps: Option<Vec<f64>>,
        /// Trials per size
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        t_final: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        dt: Option<f64>,
    },
    /// Human-readable claim table from a run manifest
    Report {
        /// Manifest path
        #[arg(long)]
        manifest: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(cli.command) {
        Ok(pass) => {
            if pass {
                ExitCode::SUCCESS
            } else {
                commands::emit_error(1, "ClaimsFailed", "one or more claim checks failed");
                ExitCode::from(1)
            }
        }
        Err(err) => {
            commands::emit_error(err.code, &err.kind, &err.message);
            ExitCode::from(err.code)
        }
    }
}
