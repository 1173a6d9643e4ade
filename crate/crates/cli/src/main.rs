use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod matrix_io;
mod report;
mod suites;

/// Norm-minimizing generalized inverses of full-rank fat matrices.
#[derive(Debug, Parser)]
#[command(name = "ginvkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute a norm-minimizing generalized inverse of a CSV matrix.
    Pinv(PinvArgs),
    /// Run a verification suite and report pass/fail per claim.
    Verify(VerifyArgs),
    /// Write a named test matrix as CSV.
    Construct(ConstructArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolverFlags {
    /// ADMM penalty parameter.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Linearized-ADMM step; defaults to 0.9·lambda/‖A‖².
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, default_value_t = 20_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol_primal: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol_change: f64,
}

#[derive(Debug, Args)]
pub struct PinvArgs {
    /// Input matrix (CSV, one row per line).
    pub input: PathBuf,
    /// Norm, e.g. `entrywise:1`, `col:2,1`, `row:1,2`, `schatten:1`, `ind1q:inf`, `spectral`.
    #[arg(long)]
    pub norm: String,
    #[arg(long, value_enum, default_value_t = TargetArg::Ginv)]
    pub target: TargetArg,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Write X here; without it X goes to stdout and the summary to stderr.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Write the full JSON report here.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Ginv,
    Pginv,
}

impl From<TargetArg> for ginvkit::Target {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Ginv => ginvkit::Target::Ginv,
            TargetArg::Pginv => ginvkit::Target::Pginv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    MppTable,
    Unbiasedness,
    Sparsity,
    Counterexamples,
    ProxProperties,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Ensemble {
    Gaussian,
    Rademacher,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    A1,
    A2,
    A3,
    A4,
    A5,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Monte-Carlo trials (unbiasedness) or random cases (prox-properties).
    #[arg(long)]
    pub trials: Option<usize>,
    /// Number of random instances (sparsity, mpp-table).
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub norm: Option<String>,
    #[arg(long, value_enum, default_value_t = TargetArg::Ginv)]
    pub target: TargetArg,
    #[arg(long, value_enum, default_value_t = Ensemble::Gaussian)]
    pub ensemble: Ensemble,
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// Inner exponent for the counterexample norm.
    #[arg(long)]
    pub p: Option<f64>,
    /// Outer exponent for the counterexample norm.
    #[arg(long)]
    pub q: Option<f64>,
    /// Angle for the a4 family.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Relative magnitude below which an entry counts as zero (sparsity).
    #[arg(long, default_value_t = 1e-5)]
    pub threshold: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    /// One of: example41, eta_counterexample, a1, a2, a3, a4, a5,
    /// partial_hadamard, dirac_hadamard, gaussian, rademacher.
    pub name: String,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Row subset for partial_hadamard, e.g. `0,1,2`.
    #[arg(long, value_delimiter = ',')]
    pub rows: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("GINVKIT_THREADS") {
        let threads: usize = v
            .trim()
            .parse()
            .with_context(|| format!("GINVKIT_THREADS must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    configure_threads()?;
    let (report, to_stderr) = match cli.command {
        Command::Pinv(args) => commands::pinv(&args)?,
        Command::Verify(args) => {
            let mut report = suites::run(&args)?;
            report.finish();
            if let Some(path) = &args.json {
                report.write_json(path)?;
            }
            (report, false)
        }
        Command::Construct(args) => commands::construct(&args)?,
    };
    let summary = report.summary();
    if to_stderr {
        eprint!("{summary}");
    } else {
        let mut out = std::io::stdout().lock();
        out.write_all(summary.as_bytes())?;
    }
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
