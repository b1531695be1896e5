use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use jd_diag::{Fallback, SolverVariant, C64};

#[derive(Debug, Parser)]
#[command(
    name = "jd-diag",
    version,
    about = "Jacobi-Davidson eigensolver with correction-equation diagnostics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the correction equation for a Ritz pair of a basis and analyze stagnation.
    Analyze(AnalyzeArgs),
    /// Run the Jacobi-Davidson solver and report the eigenpair and iteration trace.
    Solve(SolveArgs),
    /// Check the built-in worked examples and print PASS/FAIL per assertion.
    Repro(ReproArgs),
}

/// Flags shared by `analyze` and `solve`.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Target as `re` or `re,im`.
    #[arg(long, default_value = "0", value_parser = parse_target, allow_hyphen_values = true)]
    pub target: C64,
    #[arg(long, value_enum, default_value_t = VariantArg::Standard)]
    pub variant: VariantArg,
    /// Ritz vectors spanning W for the subspace variant.
    #[arg(long, default_value_t = 2)]
    pub wdim: usize,
    /// Emit the JSON document (the default for this command).
    #[arg(long)]
    pub json: bool,
    /// Write the document to a file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print a human-readable table to stderr.
    #[arg(long, short)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    pub matrix: PathBuf,
    /// Search basis; columns need not be orthonormal.
    pub basis: PathBuf,
    /// Left search basis for the two-sided variants (defaults to the basis).
    #[arg(long)]
    pub left_basis: Option<PathBuf>,
    /// Membership tolerance for the diagnostics.
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    pub matrix: PathBuf,
    /// Convergence tolerance on ‖r‖ / ‖A‖_F.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// Basis size that triggers a restart.
    #[arg(long, default_value_t = 20)]
    pub mmax: usize,
    /// Ritz vectors kept on restart.
    #[arg(long, default_value_t = 3)]
    pub keep: usize,
    /// Use the two-sided solver (implied by `--variant bi|orth`).
    #[arg(long)]
    pub two_sided: bool,
    #[arg(long, value_enum, default_value_t = FallbackArg::Residual)]
    pub fallback: FallbackArg,
    /// Seed for a random start vector.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Start vector or start basis as a Matrix Market file.
    #[arg(long)]
    pub start: Option<PathBuf>,
    /// Left start vector for two-sided runs (defaults to the right one).
    #[arg(long)]
    pub left_start: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct ReproArgs {
    /// Print the assertion list as JSON instead of PASS/FAIL lines.
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Standard,
    Subspace,
    FullSubspace,
    Bi,
    Orth,
}

impl From<VariantArg> for SolverVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Standard => Self::Standard,
            VariantArg::Subspace => Self::Subspace,
            VariantArg::FullSubspace => Self::FullSubspace,
            VariantArg::Bi => Self::Bi,
            VariantArg::Orth => Self::Orth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FallbackArg {
    Residual,
    Abort,
}

impl From<FallbackArg> for Fallback {
    fn from(f: FallbackArg) -> Self {
        match f {
            FallbackArg::Residual => Self::ResidualExpansion,
            FallbackArg::Abort => Self::Abort,
        }
    }
}

pub fn parse_target(s: &str) -> Result<C64, String> {
    let parse = |t: &str| {
        let x: f64 = t.trim().parse().map_err(|_| format!("`{t}` is not a number"))?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err(format!("`{t}` is not finite"))
        }
    };
    match s.split_once(',') {
        Some((re, im)) => Ok(C64::new(parse(re)?, parse(im)?)),
        None => Ok(C64::new(parse(s)?, 0.0)),
    }
}
