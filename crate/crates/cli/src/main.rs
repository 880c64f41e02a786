//! `tidyfit`: fit models on CSV data (optionally grouped, optionally
//! bootstrapped) and emit the component-, observation-, or model-level tidy
//! table as CSV or JSON lines.
//!
//! Exit codes are a stable contract: 0 success, 2 usage or schema errors,
//! 3 fit errors (naming the failing group or replicate), 4 golden-value
//! mismatch from `reproduce --check`.

mod fit;
mod inflate;
mod reproduce;
mod summarize;
mod table;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "tidyfit", version, about = "Tidy model fits on CSV data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model and print the selected tidy output
    Fit(fit::FitArgs),
    /// Grouped reductions (quantiles, medians, sums) over a table
    Summarize(summarize::SummarizeArgs),
    /// Factorially cross a table with a parameter grid
    Inflate(inflate::InflateArgs),
    /// Regenerate a bundled reference table, optionally checking it
    Reproduce(reproduce::ReproduceArgs),
}

/// CLI-level error: wraps library errors and adds usage/golden failures.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(std::io::Error),
    Core(tidyfit_core::Error),
    Golden { target: String, detail: String },
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Io(err) => write!(f, "{err}"),
            CliError::Core(err) => write!(f, "{err}"),
            CliError::Golden { target, detail } => {
                write!(f, "golden mismatch in `{target}`: {detail}")
            }
        }
    }
}

impl From<tidyfit_core::Error> for CliError {
    fn from(err: tidyfit_core::Error) -> Self {
        CliError::Core(err)
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Core(err) => {
                if err.is_fit_error() {
                    3
                } else {
                    2
                }
            }
            CliError::Golden { .. } => 4,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = with_thread_cap(|| match cli.command {
        Command::Fit(args) => fit::run(args),
        Command::Summarize(args) => summarize::run(args),
        Command::Inflate(args) => inflate::run(args),
        Command::Reproduce(args) => reproduce::run(args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

/// Honors TIDYFIT_THREADS by running the command inside a sized thread pool
/// (group and replicate fits fan out across it).
fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let cap = std::env::var("TIDYFIT_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0);
    match cap {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}
