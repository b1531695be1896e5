//! Command-line front end: Matrix Market ingestion, the `analyze`, `solve`
//! and `repro` subcommands, and their JSON reports.

pub mod analyze;
pub mod args;
pub mod error;
pub mod mm;
pub mod report;
pub mod repro;
pub mod solve;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
use jd_diag::Tolerance;

use args::{Cli, Command};
use error::{exit, CliError};

/// Environment variable overriding the membership tolerance.
pub const TOL_ENV: &str = "JD_DIAG_TOL";

/// Base tolerances: the library defaults with `membership_tol` taken from
/// `env_tol` when set.
pub fn base_tolerance(env_tol: Option<&str>) -> Result<Tolerance, CliError> {
    let tol = Tolerance::default();
    match env_tol {
        None => Ok(tol),
        Some(s) => {
            let x: f64 = s
                .trim()
                .parse()
                .map_err(|_| CliError::Invalid(format!("{TOL_ENV}=`{s}` is not a number")))?;
            let tol = tol.with_membership_tol(x);
            tol.validate()?;
            Ok(tol)
        }
    }
}

fn execute(cli: Cli, env_tol: Option<&str>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    let tol = base_tolerance(env_tol)?;
    match cli.command {
        Command::Analyze(a) => {
            let tol = match a.tol {
                Some(t) => tol.with_membership_tol(t),
                None => tol,
            };
            analyze::run(&a, &tol, stdout, stderr).map(|_| exit::OK)
        }
        Command::Solve(s) => solve::run(&s, &tol, stdout, stderr),
        Command::Repro(r) => repro::run(&r, &repro::ReproFixtures::default(), stdout),
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I, env_tol: Option<&str>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { exit::INVALID_INPUT } else { exit::OK };
        }
    };
    match execute(cli, env_tol, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
