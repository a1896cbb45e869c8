//! `seorder`: scenario-driven checks of stochastic orders between
//! skew-elliptical distributions.

mod commands;
mod dto;
mod error;
mod output;
mod parallel;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

/// Usage errors.
const EXIT_USAGE: u8 = 64;
/// Unreadable or invalid input.
const EXIT_INPUT: u8 = 1;

#[derive(Parser, Debug)]
#[command(name = "seorder", version, about = "Stochastic order checks for skew-elliptical distributions")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Master seed (overrides the scenario's `mc.seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Relative tolerance for parameter comparisons.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output file (written atomically); stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sampling; 0 picks the number of cores.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Args, Debug, Clone)]
pub struct McArgs {
    /// Restrict to these orders (repeatable); default: the scenario's list.
    #[arg(long = "order")]
    pub orders: Vec<String>,
    /// Draws per distribution.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub family_size: Option<usize>,
    /// Violation threshold in standard errors.
    #[arg(long)]
    pub z: Option<f64>,
    /// Draw both batches from one stream.
    #[arg(long)]
    pub crn: bool,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Classify every order in a scenario from its parameters.
    Check { scenario: PathBuf },
    /// Monte-Carlo check of E f(X) <= E f(Y) over each order's test family.
    Verify {
        scenario: PathBuf,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Search each order's class for a function with E f(Y) < E f(X).
    Falsify {
        scenario: PathBuf,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Draw a sample: CSV plus a JSON sidecar `<out>.json`.
    Sample {
        params: PathBuf,
        #[arg(long)]
        m: usize,
    },
    /// Density at the given points (each `--at` is a comma-separated point).
    Density {
        params: PathBuf,
        #[arg(long = "at", required = true, allow_hyphen_values = true)]
        at: Vec<String>,
    },
    /// Mean, covariance and derived parameters.
    Moments { params: PathBuf },
    /// Cone membership of a symmetric matrix given as a JSON array of rows.
    Cone {
        /// Inline matrix, e.g. '[[1,-3],[-3,1]]'.
        #[arg(long, conflicts_with = "matrix_file", allow_hyphen_values = true)]
        matrix: Option<String>,
        #[arg(long)]
        matrix_file: Option<PathBuf>,
        /// psd, nonneg, offdiag_nonneg, diag_nonneg, copositive or completely_positive.
        #[arg(long, default_value = "copositive")]
        kind: String,
    },
    /// Classify, then verify ordered and falsify refuted verdicts.
    Run { scenario: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
