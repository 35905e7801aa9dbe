//! `covsel` command-line tool: solve, generate, recover, bench.

mod commands;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use covsel::SolverKind;

#[derive(Parser)]
#[command(name = "covsel", version, about = "Sparse inverse covariance selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem read from a matrix file
    Solve(SolveArgs),
    /// Write a seeded synthetic instance
    Gen(GenArgs),
    /// Run a penalty sweep over seeded instances and score support recovery
    Recover(RecoverArgs),
    /// Time solvers across problem sizes
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
pub struct BudgetArgs {
    /// Sweep cap for bcd
    #[arg(long, default_value_t = 4)]
    pub max_sweeps: usize,
    /// Iteration cap for the Nesterov solvers (default: theoretical bound)
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Gap evaluation period for the Nesterov solvers
    #[arg(long, default_value_t = 10)]
    pub trace_every: usize,
}

#[derive(Args)]
pub struct SolveArgs {
    /// Sample covariance (dense text or MatrixMarket)
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long)]
    pub rho: f64,
    /// Lower spectral bound on X
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Upper spectral bound on X
    #[arg(long)]
    pub beta: Option<f64>,
    /// Target duality gap
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value = "bcd")]
    pub solver: SolverKind,
    #[command(flatten)]
    pub budget: BudgetArgs,
    /// Directory receiving X.txt, sigma_hat.txt, support.mtx and report.json
    #[arg(long, short, default_value = ".")]
    pub out_dir: PathBuf,
    /// Convergence trace CSV (iteration, seconds, gap)
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Off-diagonal |X_ij| above this count as edges in support.mtx
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
}

#[derive(Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    /// Fraction of nonzero off-diagonal entries in A
    #[arg(long)]
    pub density: f64,
    /// Uniform noise magnitude added to A^-1
    #[arg(long)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving A.txt, A_inv.txt, sigma.txt and support.mtx
    #[arg(long, short, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct RecoverArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub density: f64,
    /// Noise magnitude
    #[arg(long)]
    pub sigma: f64,
    /// Number of seeded instances
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub first_seed: u64,
    /// Penalties to sweep (default: sigma/10, sigma, 10 sigma)
    #[arg(long, value_delimiter = ',')]
    pub rho: Vec<f64>,
    /// Classification threshold on |X_ij| (default: sigma)
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    #[arg(long, default_value = "nesterov-dual")]
    pub solver: SolverKind,
    #[command(flatten)]
    pub budget: BudgetArgs,
    /// Directory receiving rows.csv, summary.csv and summary.json
    #[arg(long, short, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "30,60,100")]
    pub sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "bcd,nesterov-dual")]
    pub solvers: Vec<SolverKind>,
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.1)]
    pub density: f64,
    /// Noise magnitude of the generated instances
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub budget: BudgetArgs,
    /// Output CSV (n, solver, seconds, gap)
    #[arg(long, short, default_value = "bench.csv")]
    pub out: PathBuf,
}

fn init_threads() {
    let Ok(value) = std::env::var("COVSEL_THREADS") else {
        return;
    };
    match value.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("warning: COVSEL_THREADS ignored: {e}");
            }
        }
        _ => eprintln!("warning: COVSEL_THREADS must be a positive integer, got '{value}'"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    let outcome = match cli.command {
        Command::Solve(args) => commands::solve(&args),
        Command::Gen(args) => commands::gen(&args).map(|()| ExitCode::SUCCESS),
        Command::Recover(args) => commands::recover(&args).map(|()| ExitCode::SUCCESS),
        Command::Bench(args) => commands::bench(&args).map(|()| ExitCode::SUCCESS),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    })
}
