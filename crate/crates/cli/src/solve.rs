//! `solve`: a full Jacobi-Davidson run with its iteration trace.

use std::io::Write;

use jd_diag::fixtures::{random_vector, seeded_rng};
use jd_diag::solver::{Eigenpair, Partial};
use jd_diag::*;
use serde::{Deserialize, Serialize};

use crate::args::SolveArgs;
use crate::error::{exit, CliError};
use crate::report::{fmt_c64, load, InputDigest, Sink, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub settings: SolveSettings,
    pub status: SolveStatus,
    pub result: SolveResult,
    pub trace: IterationTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSettings {
    pub config: SolverConfig,
    pub two_sided: bool,
    /// `ones`, `seed:<n>` or `file`.
    pub start: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStatus {
    pub converged: bool,
    pub iterations: usize,
    pub stagnation_events: usize,
    pub error: Option<String>,
    pub exit_code: i32,
}

/// Best approximation at the end of the run, converged or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SolveResult {
    OneSided(Eigenpair),
    TwoSided {
        theta: C64,
        q: Vector,
        p: Vector,
        right_residual: f64,
        left_residual: f64,
    },
}

impl SolveResult {
    pub fn value(&self) -> C64 {
        match self {
            Self::OneSided(e) => e.value,
            Self::TwoSided { theta, .. } => *theta,
        }
    }
}

fn split(outcome: Partial) -> (SolveResult, IterationTrace, usize, bool) {
    match outcome {
        Partial::OneSided(o) => (SolveResult::OneSided(o.eigenpair), o.trace, o.iterations, o.converged),
        Partial::TwoSided(o) => (
            SolveResult::TwoSided {
                theta: o.theta,
                q: o.q,
                p: o.p,
                right_residual: o.right_residual,
                left_residual: o.left_residual,
            },
            o.trace,
            o.iterations,
            o.converged,
        ),
    }
}

fn start_vectors(args: &SolveArgs, n: usize, inputs: &mut Vec<InputDigest>) -> Result<(DenseMatrix, String), CliError> {
    if let Some(path) = &args.start {
        let (f, d) = load(path, "start")?;
        if f.matrix.rows() != n {
            return Err(CliError::Dimension(format!(
                "start has {} rows, matrix order is {n}",
                f.matrix.rows()
            )));
        }
        inputs.push(d);
        return Ok((f.matrix, "file".into()));
    }
    if let Some(seed) = args.seed {
        let v = random_vector(&mut seeded_rng(seed), n);
        return Ok((DenseMatrix::from_column(&v), format!("seed:{seed}")));
    }
    Ok((DenseMatrix::from_column(&Vector::ones(n)), "ones".into()))
}

pub fn solve(args: &SolveArgs, tol: &Tolerance) -> Result<SolveReport, CliError> {
    let (afile, adig) = load(&args.matrix, "matrix")?;
    let a = afile.matrix;
    if !a.is_square() {
        return Err(CliError::Dimension(format!(
            "matrix is {}x{}, expected square",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut inputs = vec![adig];
    let mut variant = SolverVariant::from(args.common.variant);
    let two_sided = args.two_sided || variant.is_two_sided();
    if two_sided && !variant.is_two_sided() {
        variant = SolverVariant::Bi;
    }
    let cfg = SolverConfig {
        target: args.common.target,
        conv_tol: args.tol,
        max_outer: args.max_iter,
        m_max: args.mmax,
        restart_keep: args.keep,
        variant,
        subspace_dim: args.common.wdim,
        fallback: args.fallback.into(),
        tolerances: *tol,
    };
    let (start, start_kind) = start_vectors(args, n, &mut inputs)?;

    let run = if two_sided {
        if start.cols() != 1 {
            return Err(CliError::Invalid("two-sided runs need a single start vector".into()));
        }
        let q0 = start.column(0);
        let p0 = match &args.left_start {
            Some(path) => {
                let (f, d) = load(path, "left-start")?;
                if f.matrix.rows() != n || f.matrix.cols() != 1 {
                    return Err(CliError::Dimension(format!(
                        "left start is {}x{}, expected {n}x1",
                        f.matrix.rows(),
                        f.matrix.cols()
                    )));
                }
                inputs.push(d);
                f.matrix.column(0)
            }
            None => q0.clone(),
        };
        jd_solve_two_sided(&a, &q0, &p0, &cfg).map(Partial::TwoSided)
    } else if start.cols() == 1 {
        jd_solve(&a, &start.column(0), &cfg).map(Partial::OneSided)
    } else {
        jd_solve_from_basis(&a, &start, &cfg).map(Partial::OneSided)
    };

    let (outcome, error, code) = match run {
        Ok(o) => (o, None, exit::OK),
        Err(e) => match e.partial().cloned() {
            Some(p) => (p, Some(e.to_string()), exit::NOT_CONVERGED),
            None => return Err(e.into()),
        },
    };
    let (result, trace, iterations, converged) = split(outcome);
    Ok(SolveReport {
        command: "solve".into(),
        inputs,
        settings: SolveSettings {
            config: cfg,
            two_sided,
            start: start_kind,
        },
        status: SolveStatus {
            converged,
            iterations,
            stagnation_events: trace.stagnation_events(),
            error,
            exit_code: code,
        },
        result,
        trace,
    })
}

pub fn table(rep: &SolveReport) -> String {
    let mut t = Table::default();
    t.row("variant", format!("{:?}", rep.settings.config.variant))
        .row("target", fmt_c64(rep.settings.config.target))
        .row("converged", rep.status.converged)
        .row("iterations", rep.status.iterations)
        .row("value", fmt_c64(rep.result.value()))
        .row("stagnation events", rep.status.stagnation_events);
    if let Some(e) = &rep.status.error {
        t.row("error", e);
    }
    let mut s = t.render();
    s.push_str("\n iter  dim  residual       action            stagnates  defective  ritz value\n");
    for r in &rep.trace.rows {
        s.push_str(&format!(
            "{:>5}  {:>3}  {:<13.6e}  {:<16}  {:<9}  {:<9}  {}\n",
            r.iteration,
            r.basis_dim,
            r.residual_norm,
            format!("{:?}", r.action),
            r.stagnation_event(),
            r.defective,
            fmt_c64(r.ritz_value)
        ));
    }
    s
}

pub fn run(args: &SolveArgs, tol: &Tolerance, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    let rep = solve(args, tol)?;
    if args.common.verbose {
        stderr.write_all(table(&rep).as_bytes())?;
    }
    if let Some(e) = &rep.status.error {
        writeln!(stderr, "error: {e}")?;
    }
    Sink {
        out: args.common.out.clone(),
    }
    .emit(&rep, stdout)?;
    Ok(rep.status.exit_code)
}
