//! `cnrange`: C-numerical ranges, radii, entanglement scans, time-reversal
//! checks and constrained transfer optimization from the command line.
//!
//! Exit codes: 0 success, 2 partial result (some flows did not converge),
//! 1 invalid input or failure.

mod commands;
mod manifest;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "cnrange", version, about = "C-numerical ranges via gradient flows on unitary groups")]
pub struct Cli {
    /// Worker threads for parallel restarts (default: all cores).
    #[arg(long, env = "CNRANGE_THREADS", global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Trace the boundary of W(C, A).
    Boundary(BoundaryArgs),
    /// C-numerical radius r(C, A) (with --local: over local unitaries).
    Radius(RadiusArgs),
    /// Local C-numerical radius over SU(2)⊗…⊗SU(2).
    LocalRadius(RadiusArgs),
    /// Entanglement distance along a family of pure states.
    EntanglementScan(ScanArgs),
    /// Decide local sign-reversibility K H K† = −H.
    Reversal(ReversalArgs),
    /// Maximize |tr(C† U A U†)| under an invariance or orthogonality constraint.
    Constrained(ConstrainedArgs),
    /// Sample points of W(C, A), W_loc(C, A) or a constrained range.
    SampleRange(SampleArgs),
}

/// Settings shared by all flow-based commands.
#[derive(Args, Debug, Clone)]
pub struct FlowArgs {
    /// Seed for all random starts and samples.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random restarts in addition to the identity start.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Iteration cap per flow.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Gradient-norm convergence threshold.
    #[arg(long)]
    pub gradient_tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct BoundaryArgs {
    #[arg(long = "A")]
    pub a: PathBuf,
    #[arg(long = "C")]
    pub c: PathBuf,
    /// Number of ray angles (at least 8).
    #[arg(long, default_value_t = 64)]
    pub m: usize,
    /// Also write boundary.svg (with the C-spectrum when N ≤ 8).
    #[arg(long)]
    pub svg: bool,
    #[command(flatten)]
    pub flow: FlowArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RadiusArgs {
    #[arg(long = "A")]
    pub a: PathBuf,
    #[arg(long = "C")]
    pub c: PathBuf,
    /// Restrict to local unitaries (N must be a power of two).
    #[arg(long)]
    pub local: bool,
    #[command(flatten)]
    pub flow: FlowArgs,
    /// Also write result.json and the manifest here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Psi3,
    Psi4,
    File,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    /// State file (or JSON list of state files' contents) for `--family file`.
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// Number of equally spaced s values in [0, 1].
    #[arg(long, default_value_t = 21)]
    pub grid: usize,
    #[arg(long)]
    pub svg: bool,
    #[command(flatten)]
    pub flow: FlowArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
#[group(id = "hamiltonian", required = true, multiple = false, args = ["h", "normal_form"])]
pub struct ReversalArgs {
    /// Dense Hermitian matrix file.
    #[arg(long = "H")]
    pub h: Option<PathBuf>,
    /// Ladder-operator normal form: [{"coeff": [re, im], "string": "z+0-"}, …].
    #[arg(long)]
    pub normal_form: Option<PathBuf>,
    #[command(flatten)]
    pub flow: FlowArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Lagrange,
    Projected,
}

#[derive(Args, Debug)]
pub struct ConstrainedArgs {
    #[arg(long = "A")]
    pub a: PathBuf,
    #[arg(long = "C")]
    pub c: PathBuf,
    /// Orthogonality constraint |tr(D† U A U†)| = m₀.
    #[arg(long = "D")]
    pub d: Option<PathBuf>,
    /// Invariance constraint U E U† = E.
    #[arg(long = "E")]
    pub e: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "lagrange")]
    pub method: Method,
    /// Write per-restart f_C paths to trajectories.csv.
    #[arg(long)]
    pub trajectories: bool,
    /// Initial penalty weight λ₀ of the linear schedule.
    #[arg(long)]
    pub lambda_initial: Option<f64>,
    /// Cap of the penalty schedule.
    #[arg(long)]
    pub lambda_cap: Option<f64>,
    #[arg(long)]
    pub svg: bool,
    #[command(flatten)]
    pub flow: FlowArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long = "A")]
    pub a: PathBuf,
    #[arg(long = "C")]
    pub c: PathBuf,
    /// Sample local unitaries instead of the full unitary group.
    #[arg(long)]
    pub local: bool,
    /// Restrict to the stabilizer of E.
    #[arg(long = "E")]
    pub e: Option<PathBuf>,
    /// Restrict to |tr(D† U A U†)| within 1e−2 of its minimum.
    #[arg(long = "D")]
    pub d: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long)]
    pub svg: bool,
    #[command(flatten)]
    pub flow: FlowArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// How a command finished.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Complete,
    Partial,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(cli.command) {
        Ok(Outcome::Complete) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
