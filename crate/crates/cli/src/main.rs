mod config;
mod error;
mod run;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{Format, OperatorConfig, RunConfig};
use crate::error::CliError;
use crate::run::Command;

/// Finite section stability scans, square and rectangular solves, and
/// convergence studies for band operators on lattice sequence spaces.
#[derive(Parser)]
#[command(name = "finsec", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Invertibility and inverse norms of the square sections over an n-range.
    Scan(Flags),
    /// Solve one square section system.
    SolveFsm(Flags),
    /// Minimum-norm least-squares solve of one rectangular section.
    SolveRfsm(Flags),
    /// Errors of rectangular solves against a large reference solve.
    Study(Flags),
    /// Scan a catalogued example and evaluate its expectations.
    Example {
        /// shift, blockdiag, rarosi, sierror, diamond, worked_A or worked_Aprime
        id: String,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Args)]
struct Flags {
    /// TOML run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named domain: interval, interval-open, square, diamond, triangle.
    #[arg(long)]
    omega: Option<String>,
    /// identity[:N], shift:k[,k..] or family:NAME:K.
    #[arg(long, allow_hyphen_values = true)]
    operator: Option<String>,
    #[arg(long)]
    example: Option<String>,
    #[arg(long)]
    nmin: Option<u64>,
    #[arg(long)]
    nmax: Option<u64>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    modulus: Vec<u64>,
    /// band, sixfifths or explicit:M1,M2,..
    #[arg(long)]
    coupling: Option<String>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    tau_rel: Option<f64>,
    #[arg(long)]
    norm_cap: Option<f64>,
    #[arg(long)]
    reference_n: Option<u64>,
    #[arg(long)]
    a_norm: Option<f64>,
    #[arg(long)]
    a_inv_norm: Option<f64>,
    /// Left shift applied to the equation before truncating.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    precondition: Option<Vec<i64>>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Flags {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            example: self.example,
            omega: self.omega,
            operator: self.operator.as_deref().map(OperatorConfig::from_flag).transpose()?,
            precondition: self.precondition,
            nmin: self.nmin,
            nmax: self.nmax,
            n: self.n,
            m: self.m,
            modulus: self.modulus,
            coupling: self.coupling,
            delta: self.delta,
            epsilon: self.epsilon,
            tau_rel: self.tau_rel,
            norm_cap: self.norm_cap,
            reference_n: self.reference_n,
            a_norm: self.a_norm,
            a_inv_norm: self.a_inv_norm,
            format: self.format,
            out: self.out,
            ..RunConfig::default()
        };
        Ok(base.merge(flags))
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (command, flags, example) = match cli.command {
        Cmd::Scan(f) => (Command::Scan, f, None),
        Cmd::SolveFsm(f) => (Command::SolveFsm, f, None),
        Cmd::SolveRfsm(f) => (Command::SolveRfsm, f, None),
        Cmd::Study(f) => (Command::Study, f, None),
        Cmd::Example { id, flags } => (Command::Example, flags, Some(id)),
    };
    let mut config = flags.into_config()?;
    if example.is_some() {
        config.example = example;
    }
    let bytes = run::run(command, &config)?;
    match &config.out {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().lock().write_all(&bytes)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("finsec: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
