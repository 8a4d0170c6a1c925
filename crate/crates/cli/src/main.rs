//! `birthdeath`: extinction probabilities and expected extinction times for
//! birth-and-death processes from the command line.
//!
//! Exit status is 0 on success, 2 when a series could not be classified
//! within the term budget, and 1 for usage and model errors.

mod commands;
mod report;

use std::io::{self, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use report::Format;

#[derive(Debug, Parser)]
#[command(
    name = "birthdeath",
    version,
    about = "Extinction probabilities and expected extinction times for birth-and-death processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extinction probabilities a_0..a_imax and their increments d_i.
    Prob(EngineArgs),
    /// Expected times to extinction omega_0..omega_imax and first-passage times delta_i.
    Time(EngineArgs),
    /// Stable series and naive recursion side by side: omega when extinction is certain, a otherwise.
    Compare(CompareArgs),
    /// Monte Carlo trajectories started from state --imax.
    Simulate(SimulateArgs),
    /// First breakdown index of the naive omega recursion at several precisions.
    DemoInstability(DemoArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Birth rate lambda_n as an expression in n.
    #[arg(long = "lambda", value_name = "EXPR", allow_hyphen_values = true)]
    lambda: String,
    /// Death rate mu_n as an expression in n.
    #[arg(long = "mu", value_name = "EXPR", allow_hyphen_values = true)]
    mu: String,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Debug, Args)]
struct SeriesArgs {
    /// Relative truncation tolerance (default 1e-14, or 10^-(digits-2) with --digits).
    #[arg(long, value_name = "REAL")]
    tol: Option<String>,
    /// Term budget per series before giving up.
    #[arg(long, value_name = "INT")]
    max_terms: Option<usize>,
}

#[derive(Debug, Args)]
struct EngineArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    series: SeriesArgs,
    /// Largest state index to report.
    #[arg(long, default_value_t = 10)]
    imax: usize,
    /// Significant decimal digits; machine precision when absent.
    #[arg(long)]
    digits: Option<u32>,
    /// Use the forward recursion instead of the series.
    #[arg(long)]
    naive: bool,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    series: SeriesArgs,
    #[arg(long, default_value_t = 30)]
    imax: usize,
    #[arg(long)]
    digits: Option<u32>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Start state.
    #[arg(long, default_value_t = 1)]
    imax: u64,
    /// Precision used to evaluate the rate expressions; trajectories always run in binary64.
    #[arg(long)]
    digits: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    runs: u64,
    #[arg(long, value_name = "REAL", default_value_t = 1000.0)]
    time_cap: f64,
}

#[derive(Debug, Args)]
struct DemoArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    series: SeriesArgs,
    #[arg(long, default_value_t = 80)]
    imax: usize,
    /// Extended precisions to run besides machine precision; repeatable.
    #[arg(long, default_values_t = [70])]
    digits: Vec<u32>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli.command) {
        Ok((report, format, status)) => {
            let mut out = io::stdout().lock();
            if let Err(err) = report.write(format, &mut out).and_then(|()| Ok(out.flush()?)) {
                eprintln!("error: {err:#}");
                return ExitCode::from(1);
            }
            if let commands::Status::Inconclusive(terms) = status {
                eprintln!(
                    "error: series truncation inconclusive after {terms} terms; raise --max-terms or loosen --tol"
                );
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
