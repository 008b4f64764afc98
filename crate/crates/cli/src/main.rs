//! `kfib`: compute, inspect and cross-validate k-generalized Fibonacci terms.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error,
//! 3 numerical non-convergence or exhausted precision.

mod commands;
mod envelope;

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;

use kfib_core::Error;

/// Input limits; anything larger is rejected as a usage error rather than
/// running out of memory or time.
pub const MAX_K: u64 = 1000;
pub const MAX_N: u64 = 100_000_000;
pub const MAX_APPROX_N: u64 = 1_000_000;
pub const MAX_PRECISION: u32 = 1 << 24;
pub const MAX_DIGITS: usize = 100_000;
pub const MAX_TABLE_ROWS: u64 = 100_000;

#[derive(Debug, Parser)]
#[command(
    name = "kfib",
    version,
    about = "k-generalized Fibonacci evaluation and verification"
)]
pub struct Cli {
    /// Print a JSON envelope instead of plain text.
    #[arg(long, global = true)]
    pub json: bool,

    /// Working precision in bits (default: chosen from k and n).
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(64..=MAX_PRECISION as i64))]
    pub precision: Option<u32>,

    /// Seed for randomly drawn initial terms.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a single term.
    Compute(ComputeArgs),
    /// Print the roots of the characteristic polynomial.
    Roots(RootsArgs),
    /// Run the identity and cross-check suite.
    Verify(VerifyArgs),
    /// Print a range of terms, optionally with every method side by side.
    Table(TableArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Recurrence,
    MatrixPower,
    ClosedForm,
    Dresden,
    BacaniRabago,
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    /// Order of the recurrence.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..=MAX_K))]
    pub k: u64,

    /// Comma-separated initial terms (default: 0,...,0,1).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub init: Option<Vec<BigInt>>,
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    #[command(flatten)]
    pub spec: SpecArgs,

    #[arg(long, value_parser = clap::value_parser!(u64).range(..=MAX_N))]
    pub n: u64,

    #[arg(long, value_enum, default_value_t = MethodArg::MatrixPower)]
    pub method: MethodArg,
}

#[derive(Debug, Args)]
pub struct RootsArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..=MAX_K))]
    pub k: u64,

    /// Fractional decimal digits to print.
    #[arg(long, default_value_t = 20, value_parser = parse_digits)]
    pub digits: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Inclusive range of orders, e.g. `2..6`.
    #[arg(long, value_parser = parse_k_range, default_value = "2..6")]
    pub k: (usize, usize),

    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(..=MAX_APPROX_N))]
    pub n_max: u64,

    /// Random initial-term vectors per order.
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Plain,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub spec: SpecArgs,

    #[arg(long, value_parser = clap::value_parser!(u64).range(..=MAX_N))]
    pub from: u64,

    #[arg(long, value_parser = clap::value_parser!(u64).range(..=MAX_N))]
    pub to: u64,

    #[arg(long, value_enum, default_value_t = TableFormat::Plain)]
    pub format: TableFormat,
}

fn parse_digits(s: &str) -> Result<usize, String> {
    let d: usize = s.parse().map_err(|e| format!("{e}"))?;
    if d > MAX_DIGITS {
        return Err(format!("at most {MAX_DIGITS} digits"));
    }
    Ok(d)
}

fn parse_k_range(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected a range like 2..6, got `{s}`"))?;
    let hi = hi.strip_prefix('=').unwrap_or(hi);
    let lo: usize = lo
        .trim()
        .parse()
        .map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: usize = hi
        .trim()
        .parse()
        .map_err(|e| format!("bad upper bound: {e}"))?;
    if lo < 2 {
        return Err("k must be at least 2".into());
    }
    if lo > hi {
        return Err(format!("empty range {lo}..{hi}"));
    }
    if hi as u64 > MAX_K {
        return Err(format!("k must be at most {MAX_K}"));
    }
    Ok((lo, hi))
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Numeric(Error::PrecisionExhausted { .. }) => "precision_exhausted",
            CliError::Numeric(Error::NonConvergence { .. }) => "non_convergence",
            CliError::Numeric(Error::IllConditioned { .. }) => "ill_conditioned",
            CliError::Numeric(Error::CalibrationFailed(_)) => "calibration_failed",
            CliError::Numeric(_) => "numeric",
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Numeric(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidSpec(m) | Error::InvalidArgument(m) => CliError::Usage(m),
            other => CliError::Numeric(other),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(&cli) {
        Ok(outcome) => {
            // a closed pipe (e.g. `| head`) is not an error worth reporting
            let _ = std::io::stdout().write_all(outcome.output.as_bytes());
            ExitCode::from(outcome.exit_code)
        }
        Err(failure) => {
            let (err, envelope) = *failure;
            eprintln!("error: {err}");
            if let Some(env) = envelope {
                let _ = writeln!(std::io::stdout(), "{}", env.to_json());
            }
            ExitCode::from(err.exit_code())
        }
    }
}
