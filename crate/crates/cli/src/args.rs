use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "b2bounds", version, about = "Rate upper bounds and small-case checks for B2 codes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Certified rate bound for q-ary B2 codes.
    Qary {
        #[arg(long)]
        q: usize,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Computed bounds next to the published comparison values.
    QaryTable {
        /// Inclusive range `a..b` or a single value.
        #[arg(long)]
        q: Range<usize>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Constant-weight bound at one relative weight.
    Cw {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[command(flatten)]
        cw: CwArgs,
    },
    /// Constant-weight bounds over a relative-weight sweep.
    CwCurve {
        /// Inclusive range `a..b` or a single value.
        #[arg(long)]
        alpha: Range<f64>,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[command(flatten)]
        cw: CwArgs,
    },
    /// Exhaustive search plus property checks on small codes.
    Verify {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        q: u8,
        /// Restrict to binary words of this weight.
        #[arg(long)]
        weight: Option<usize>,
        /// Seed for the randomized greedy codes.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of randomized greedy codes checked alongside the witness.
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// Replay a stored certificate without re-solving.
    Recertify { path: PathBuf },
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 4096)]
    pub grid_size: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub dual_tol: f64,
    /// Order of the Toeplitz section checked on the primal.
    #[arg(long, default_value_t = 100)]
    pub toeplitz_n: usize,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CwArgs {
    #[arg(long, default_value_t = 1e-9)]
    pub bisect_tol: f64,
    /// Points per pass in the outer search of the competing bound.
    #[arg(long, default_value_t = 2001)]
    pub e_grid: usize,
    /// Points per pass in the inner search of the competing bound.
    #[arg(long, default_value_t = 2001)]
    pub alpha_grid: usize,
    #[arg(long, default_value_t = 3)]
    pub refine_passes: usize,
}

/// Inclusive `lo..hi`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct Range<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: FromStr + PartialOrd + Copy> FromStr for Range<T> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |t: &str| t.trim().parse::<T>().map_err(|_| format!("cannot parse `{t}`"));
        let (lo, hi) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b.strip_prefix('=').unwrap_or(b))?),
            None => {
                let v = parse(s)?;
                (v, v)
            }
        };
        if hi < lo {
            return Err(format!("empty range `{s}`"));
        }
        Ok(Range { lo, hi })
    }
}
