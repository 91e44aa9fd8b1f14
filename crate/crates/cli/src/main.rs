mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use partitest::Error;

#[derive(Parser, Debug)]
#[command(name = "partitest", version, about = "Bayesian multiple comparisons over partitions of groups")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Prior probabilities of partitions or of block counts.
    Priors(PriorsArgs),
    /// Posterior over partitions for grouped data.
    Test(TestArgs),
    /// Error-rate simulation over replications.
    Simulate(SimulateArgs),
    /// List all partitions of K groups as restricted growth strings.
    Enumerate(EnumerateArgs),
    /// Exact combinatorial counts.
    Combinat {
        #[command(subcommand)]
        what: Combinat,
    },
}

#[derive(Args, Debug, Serialize)]
pub struct PriorsArgs {
    #[arg(long)]
    pub k: usize,
    /// Prior spec: uniform | bb:A,B | bb:A,k | bb:A,k2 | dp:A | dp:symmetric. Repeatable.
    #[arg(long = "prior")]
    pub priors: Vec<String>,
    /// One row per block count instead of per partition.
    #[arg(long)]
    pub by_size: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    /// CSV `group,successes,trials`.
    Proportions,
    /// CSV `group,value` or `group,n,mean,sd`.
    Means,
}

#[derive(Args, Debug, Serialize)]
pub struct TestArgs {
    pub kind: DataKind,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "bb:1,k")]
    pub prior: String,
    /// Model spec; defaults to `beta:1,1` for proportions and `jzs` for means.
    #[arg(long)]
    pub model: Option<String>,
    /// Enumerate all partitions.
    #[arg(long, conflicts_with = "force_mcmc")]
    pub exact: bool,
    /// Sample even when enumeration is cheap.
    #[arg(long)]
    pub force_mcmc: bool,
    /// Largest K enumerated automatically.
    #[arg(long, default_value_t = 8)]
    pub exact_cap: usize,
    #[arg(long, default_value_t = 12_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 2_000)]
    pub burnin: usize,
    #[arg(long, default_value_t = 4)]
    pub chains: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Number of most probable partitions reported.
    #[arg(long, default_value_t = 20)]
    pub top: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Fraction of the K − 1 possible equalities that hold.
    #[arg(long, default_value_t = 1.0)]
    pub equalities: f64,
    /// Comma-separated prior specs, e.g. `uniform,bb:1,5,dp:0.5`.
    #[arg(long, default_value = "uniform,bb:1,k,dp:symmetric")]
    pub priors: String,
    #[arg(long, default_value = "jzs")]
    pub model: String,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long, default_value_t = 0.2)]
    pub effect_step: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub exact_cap: usize,
    #[arg(long, default_value_t = 6_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 1_000)]
    pub burnin: usize,
    #[arg(long, default_value_t = 2)]
    pub chains: usize,
    /// Run K ∈ {5, 9}, n ∈ {50, 100, 250, 500} and every equality fraction.
    #[arg(long)]
    pub full_grid: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct EnumerateArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Serialize)]
pub enum Combinat {
    Bell { n: usize },
    Stirling2 { n: usize, k: usize },
    RStirling { n: usize, k: usize, r: usize },
    RBell { n: usize, r: usize },
}

/// A failure mapped onto an exit code.
#[derive(Debug)]
pub struct Failure {
    pub kind: &'static str,
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { kind: "usage", code: 2, message: message.into() }
    }

    pub fn io(e: std::io::Error, what: &std::path::Path) -> Self {
        Failure { kind: "data", code: 3, message: format!("{}: {e}", what.display()) }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (kind, code) = match &e {
            Error::Domain(_) | Error::Infeasible(_) => ("usage", 2),
            Error::Data(_) => ("data", 3),
            Error::Numerical(_) => ("numerical", 4),
            Error::Capacity { .. } => ("capacity", 5),
        };
        Failure { kind, code, message: e.to_string() }
    }
}

fn report(f: &Failure) -> ExitCode {
    let body = serde_json::json!({ "error": { "kind": f.kind, "code": f.code, "message": f.message } });
    eprintln!("{body}");
    ExitCode::from(f.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report(&Failure::usage(e.render().to_string().trim_end())),
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return report(&Failure::usage("--threads must be at least 1"));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return report(&Failure::usage(e.to_string()));
        }
    }
    let result = match &cli.cmd {
        Cmd::Priors(a) => commands::priors(a),
        Cmd::Test(a) => commands::test(a),
        Cmd::Simulate(a) => commands::simulate(a),
        Cmd::Enumerate(a) => commands::enumerate(a),
        Cmd::Combinat { what } => commands::combinat(what),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(&f),
    }
}
