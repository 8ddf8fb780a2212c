//! Command-line driver for the XY model / toric-rotor code toolkit.

mod config;
mod exact;
mod lambda;
mod mc;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "XYROTOR_OUT";

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or parameters; nothing was computed.
    Validation(String),
    Io(String),
    /// A verification suite ran and found a violation.
    Verification(String),
}

impl From<xyrotor::Error> for CliError {
    fn from(e: xyrotor::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Io(m) => f.write_str(m),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "xyrotor", version, about = "XY model Monte Carlo, exact small-torus sums and toric-rotor resilience")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a torus and check the stabilizer and logical-operator algebra.
    LatticeCheck(exact::LatticeCheckArgs),
    /// Run one Monte Carlo chain and write its series and stiffness.
    McRun(mc::McRunArgs),
    /// Monte Carlo stiffness over a temperature grid.
    StiffnessSweep(mc::SweepArgs),
    /// Exact ln Z and ln Z_φ of a small torus.
    ExactZ(exact::ExactZArgs),
    /// Cross-check the dual representation against independent oracles.
    VerifyMapping(exact::VerifyArgs),
    /// Resilience order parameter from a stiffness table.
    LambdaSweep(lambda::LambdaArgs),
    /// Re-analyse an existing series.csv.
    Analyze(mc::AnalyzeArgs),
}

/// Options shared by every subcommand.
#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Output directory (default: $XYROTOR_OUT, else ./xyrotor-out).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with flag values; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Maximum worker threads (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Also write SVG plots where applicable.
    #[arg(long)]
    pub svg: bool,
}

impl Common {
    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("xyrotor-out"))
    }

    pub fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        let n = match self.workers {
            Some(0) => return Err(CliError::Validation("--workers must be at least 1".into())),
            Some(n) => n,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Io(e.to_string()))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::LatticeCheck(a) => exact::lattice_check(&a),
        Command::McRun(a) => mc::mc_run(&a),
        Command::StiffnessSweep(a) => mc::stiffness_sweep(&a),
        Command::ExactZ(a) => exact::exact_z(&a),
        Command::VerifyMapping(a) => exact::verify_mapping(&a),
        Command::LambdaSweep(a) => lambda::lambda_sweep(&a),
        Command::Analyze(a) => mc::analyze(&a),
    }
}

fn main() -> ExitCode {
    let cli = match config::parse(std::env::args_os().collect()) {
        Ok(cli) => cli,
        Err(config::ParseError::Clap(e)) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
        Err(config::ParseError::Config(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ CliError::Verification(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
