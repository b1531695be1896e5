//! The outer Jacobi-Davidson loop, one-sided and two-sided, with
//! diagnostics-gated expansion, residual fallback, thick restarts and a full
//! iteration trace.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correction::{
    classify_standard, classify_subspace, classify_two_sided, solve_on_complement, solve_standard, solve_subspace,
    solve_two_sided, solve_two_sided_on_complement, CorrectionError, Solvability, SolvabilityReport, SubspaceMode,
    TwoSidedKind, BREAKDOWN,
};
use crate::linalg::{lu_solve, orthonormalize, small_eig, svd, DenseMatrix, LinalgError, Tolerance, Vector, C64};
use crate::ritz::{
    extract_two_sided, is_defective, rank_by, ranked_ritz_pairs, PetrovTriple, ProjectedMatrix, RitzError, RitzPair,
    SearchBasis,
};
use crate::stagnation::{
    expansion_is_trivial, stagnation_predicate_standard, stagnation_predicate_subspace, stagnation_predicate_two_sided,
    StagnationError, StagnationReport,
};

/// A new direction whose norm drops below this fraction of its norm before
/// orthogonalization is discarded.
const COLLAPSE: f64 = 1e-12;

/// Correction equation used to expand the search space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolverVariant {
    /// Projection against the Ritz vector only.
    Standard,
    /// Projection against the span of the leading Ritz vectors
    /// ([`SolverConfig::subspace_dim`] of them).
    Subspace,
    /// Projection against the whole search space.
    FullSubspace,
    /// Two-sided, bi-orthonormal bases (`PᴴQ = I`).
    Bi,
    /// Two-sided, separately orthonormal bases.
    Orth,
}

impl SolverVariant {
    pub fn is_two_sided(self) -> bool {
        matches!(self, Self::Bi | Self::Orth)
    }
}

/// What to do when the correction cannot expand the search space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Fallback {
    /// Expand with the residual orthogonalized against the basis.
    ResidualExpansion,
    /// Stop with [`SolverError::Aborted`].
    Abort,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub target: C64,
    /// Convergence threshold on `‖r‖ / ‖A‖_F`.
    pub conv_tol: f64,
    pub max_outer: usize,
    /// Basis size that triggers a restart; clamped to the matrix order.
    pub m_max: usize,
    /// Ritz vectors kept on restart.
    pub restart_keep: usize,
    pub variant: SolverVariant,
    /// Number of Ritz vectors spanning `W` for [`SolverVariant::Subspace`].
    pub subspace_dim: usize,
    pub fallback: Fallback,
    pub tolerances: Tolerance,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            target: C64::new(0.0, 0.0),
            conv_tol: 1e-10,
            max_outer: 200,
            m_max: 20,
            restart_keep: 3,
            variant: SolverVariant::Standard,
            subspace_dim: 2,
            fallback: Fallback::ResidualExpansion,
            tolerances: Tolerance::default(),
        }
    }
}

impl SolverConfig {
    /// Checks the configuration and returns `(m_max, restart_keep)` clamped
    /// for a matrix of order `n`.
    pub fn effective_limits(&self, n: usize) -> Result<(usize, usize), SolverError> {
        self.tolerances.validate()?;
        let bad = |msg: String| Err(SolverError::InvalidConfig(msg));
        if !(self.conv_tol.is_finite() && self.conv_tol > 0.0) {
            return bad(format!("conv_tol must be positive, got {}", self.conv_tol));
        }
        if !self.target.re.is_finite() || !self.target.im.is_finite() {
            return bad("target must be finite".into());
        }
        if self.max_outer == 0 {
            return bad("max_outer must be at least 1".into());
        }
        if self.restart_keep == 0 || self.restart_keep >= self.m_max {
            return bad(format!(
                "need 1 <= restart_keep < m_max, got restart_keep = {}, m_max = {}",
                self.restart_keep, self.m_max
            ));
        }
        if self.variant == SolverVariant::Subspace && self.subspace_dim == 0 {
            return bad("subspace_dim must be at least 1".into());
        }
        let m = self.m_max.min(n).max(1);
        let keep = self.restart_keep.min(m.saturating_sub(1)).max(1);
        Ok((m, keep))
    }
}

/// What an iteration did with the search space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExpansionAction {
    CorrectionVector,
    ResidualVector,
    /// The basis was compressed to the kept Ritz vectors before expanding.
    Restart,
    Converged,
    Failed,
}

/// Vector appended to one basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expansion {
    Correction,
    Residual,
}

/// Correction-equation diagnostics for one side of an iteration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SideDiagnostics {
    /// `None` when classification was impossible (singular shift).
    pub class: Option<Solvability>,
    pub witness_magnitude: Option<f64>,
    /// Predicate decision; present whenever the class is unique.
    pub stagnates: Option<bool>,
    pub stagnation_residual: Option<f64>,
    /// Whether the computed correction lay in the search space.
    pub trivial: Option<bool>,
    pub trivial_residual: Option<f64>,
    /// The predicate and the computed correction disagreed.
    pub predicate_mismatch: bool,
    /// `¬stagnates ∨ defective`; `None` without a predicate.
    pub implication_holds: Option<bool>,
    pub expansion: Option<Expansion>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    /// Basis dimension the Ritz value was extracted from.
    pub basis_dim: usize,
    pub ritz_value: C64,
    pub residual_norm: f64,
    /// Left residual `‖(Aᴴ − θ̄I)p‖` for two-sided runs.
    pub left_residual_norm: Option<f64>,
    /// Whether the Ritz value is defective in the projected matrix.
    pub defective: bool,
    pub nullities: (usize, usize),
    pub action: ExpansionAction,
    pub right: SideDiagnostics,
    pub left: Option<SideDiagnostics>,
}

impl TraceRow {
    pub fn stagnation_event(&self) -> bool {
        self.right.stagnates == Some(true) || self.left.as_ref().is_some_and(|l| l.stagnates == Some(true))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IterationTrace {
    pub rows: Vec<TraceRow>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn stagnation_events(&self) -> usize {
        self.rows.iter().filter(|r| r.stagnation_event()).count()
    }

    pub fn ritz_values(&self) -> Vec<C64> {
        self.rows.iter().map(|r| r.ritz_value).collect()
    }
}

/// Best eigenpair approximation and the trace that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenpair {
    pub value: C64,
    pub vector: Vector,
    /// `‖Ax − λx‖`, recomputed from `A`.
    pub residual_norm: f64,
    /// `residual_norm / ‖A‖_F`.
    pub relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub eigenpair: Eigenpair,
    pub iterations: usize,
    pub converged: bool,
    pub trace: IterationTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSidedOutcome {
    pub theta: C64,
    /// Unit right vector.
    pub q: Vector,
    /// Unit left vector.
    pub p: Vector,
    pub right_residual: f64,
    pub left_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: IterationTrace,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Linalg(LinalgError),
    #[error(transparent)]
    Ritz(RitzError),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("starting vector is zero")]
    ZeroStart,
    #[error("no convergence after {iterations} outer iterations")]
    MaxIterations { iterations: usize, partial: Box<Partial> },
    #[error("aborted at iteration {iteration}: {reason}")]
    Aborted {
        iteration: usize,
        reason: String,
        partial: Box<Partial>,
    },
    #[error("fallback vector lies in the search space at iteration {iteration}")]
    FallbackExhausted { iteration: usize, partial: Box<Partial> },
    #[error("bi-orthogonality breakdown (|pᴴq| = {overlap:.3e})")]
    BiorthBreakdown {
        overlap: f64,
        partial: Option<Box<Partial>>,
    },
}

/// State at the moment a run stopped without converging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Partial {
    OneSided(SolveOutcome),
    TwoSided(TwoSidedOutcome),
}

impl Partial {
    pub fn trace(&self) -> &IterationTrace {
        match self {
            Self::OneSided(o) => &o.trace,
            Self::TwoSided(o) => &o.trace,
        }
    }
}

impl SolverError {
    /// Trace of the failed run, if one was recorded.
    pub fn partial(&self) -> Option<&Partial> {
        match self {
            Self::MaxIterations { partial, .. }
            | Self::Aborted { partial, .. }
            | Self::FallbackExhausted { partial, .. } => Some(partial),
            Self::BiorthBreakdown { partial, .. } => partial.as_deref(),
            _ => None,
        }
    }

    pub fn trace(&self) -> Option<&IterationTrace> {
        self.partial().map(Partial::trace)
    }
}

impl From<LinalgError> for SolverError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::DimensionMismatch { expected, found } => Self::DimensionMismatch { expected, found },
            other => Self::Linalg(other),
        }
    }
}

impl From<RitzError> for SolverError {
    fn from(e: RitzError) -> Self {
        match e {
            RitzError::Linalg(l) => l.into(),
            RitzError::DimensionMismatch { expected, found } => Self::DimensionMismatch { expected, found },
            other => Self::Ritz(other),
        }
    }
}

/// Runs the one-sided method from a single starting vector.
pub fn jd_solve(a: &DenseMatrix, v0: &Vector, cfg: &SolverConfig) -> Result<SolveOutcome, SolverError> {
    if v0.len() != a.rows() {
        return Err(SolverError::DimensionMismatch {
            expected: a.rows(),
            found: v0.len(),
        });
    }
    jd_solve_from_basis(a, &DenseMatrix::from_column(v0), cfg)
}

/// Runs the one-sided method from the span of the given columns.
pub fn jd_solve_from_basis(
    a: &DenseMatrix,
    start: &DenseMatrix,
    cfg: &SolverConfig,
) -> Result<SolveOutcome, SolverError> {
    check_square(a)?;
    let n = a.rows();
    if start.rows() != n {
        return Err(SolverError::DimensionMismatch {
            expected: n,
            found: start.rows(),
        });
    }
    if cfg.variant.is_two_sided() {
        return Err(SolverError::InvalidConfig(
            "two-sided variants require the two-sided solver".into(),
        ));
    }
    let (m_max, keep) = cfg.effective_limits(n)?;
    let tol = &cfg.tolerances;
    let mut v = match orthonormalize(start, tol) {
        Ok(o) => o.q,
        Err(LinalgError::EmptySpan) => return Err(SolverError::ZeroStart),
        Err(e) => return Err(e.into()),
    };
    if v.cols() > m_max {
        v = v.columns(0, m_max);
    }
    let anorm = a.norm_fro();
    let scale = if anorm > 0.0 { anorm } else { 1.0 };
    let mut trace = IterationTrace::default();
    let mut best: Option<RitzPair> = None;

    for iteration in 1..=cfg.max_outer {
        let mut basis = SearchBasis::new(v.clone())?;
        let (mut pairs, _) = ranked_ritz_pairs(a, &basis, cfg.target)?;
        let mut restarted = false;
        if basis.dim() >= m_max && pairs[0].residual_norm() > cfg.conv_tol * scale && basis.dim() > keep {
            v = compress(basis.matrix(), pairs.iter().take(keep).map(|p| p.coeff.clone()), tol)?;
            basis = SearchBasis::new(v.clone())?;
            pairs = ranked_ritz_pairs(a, &basis, cfg.target)?.0;
            restarted = true;
        }
        let t = ProjectedMatrix::new(a, &basis)?;
        let pair = pairs[0].clone();
        let rnorm = pair.residual_norm();
        let (defective, nullities) = defect_flags(t.matrix(), pair.value, tol);
        let mut row = TraceRow {
            iteration,
            basis_dim: basis.dim(),
            ritz_value: pair.value,
            residual_norm: rnorm,
            left_residual_norm: None,
            defective,
            nullities,
            action: ExpansionAction::Converged,
            right: SideDiagnostics::default(),
            left: None,
        };
        best = Some(pair.clone());
        if rnorm <= cfg.conv_tol * scale {
            trace.rows.push(row);
            return Ok(outcome(a, &pair, iteration, true, trace, scale));
        }

        let (diag, correction) = one_sided_correction(a, &basis, &pairs, cfg);
        row.right = diag;
        let gated = row.right.stagnates == Some(true) || row.right.trivial == Some(true);
        let mut direction = None;
        if let Some(c) = correction.filter(|_| !gated) {
            direction = orthogonalize_against(&v, &c);
            if direction.is_none() {
                row.right
                    .note
                    .get_or_insert_with(|| "correction collapsed under orthogonalization".into());
            }
        }
        let kind = if let Some(d) = direction {
            v.push_column(&d);
            Expansion::Correction
        } else {
            if cfg.fallback == Fallback::Abort {
                row.action = ExpansionAction::Failed;
                let reason = fallback_reason(&row.right);
                trace.rows.push(row);
                return Err(SolverError::Aborted {
                    iteration,
                    reason,
                    partial: Box::new(Partial::OneSided(outcome(a, &pair, iteration, false, trace, scale))),
                });
            }
            match orthogonalize_against(&v, &pair.residual) {
                Some(d) => {
                    v.push_column(&d);
                    Expansion::Residual
                }
                None => {
                    row.action = ExpansionAction::Failed;
                    trace.rows.push(row);
                    return Err(SolverError::FallbackExhausted {
                        iteration,
                        partial: Box::new(Partial::OneSided(outcome(a, &pair, iteration, false, trace, scale))),
                    });
                }
            }
        };
        row.right.expansion = Some(kind);
        row.action = action_for(restarted, &[kind]);
        trace.rows.push(row);
    }
    let pair = best.expect("at least one iteration");
    let iterations = cfg.max_outer;
    Err(SolverError::MaxIterations {
        iterations,
        partial: Box::new(Partial::OneSided(outcome(a, &pair, iterations, false, trace, scale))),
    })
}

fn check_square(a: &DenseMatrix) -> Result<(), SolverError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        }
        .into());
    }
    if a.rows() == 0 {
        return Err(LinalgError::EmptyMatrix.into());
    }
    Ok(())
}

fn action_for(restarted: bool, kinds: &[Expansion]) -> ExpansionAction {
    if restarted {
        ExpansionAction::Restart
    } else if kinds.iter().all(|k| *k == Expansion::Correction) {
        ExpansionAction::CorrectionVector
    } else {
        ExpansionAction::ResidualVector
    }
}

fn fallback_reason(d: &SideDiagnostics) -> String {
    match (d.class, d.stagnates, d.trivial) {
        (None, _, _) => d
            .note
            .clone()
            .unwrap_or_else(|| "correction equation could not be classified".into()),
        (Some(Solvability::NoSolution), _, _) => "correction equation has no solution".into(),
        (_, Some(true), _) | (_, _, Some(true)) => "correction lies in the search space".into(),
        _ => d.note.clone().unwrap_or_else(|| "correction could not be used".into()),
    }
}

fn outcome(
    a: &DenseMatrix,
    pair: &RitzPair,
    iterations: usize,
    converged: bool,
    trace: IterationTrace,
    scale: f64,
) -> SolveOutcome {
    let residual_norm = a
        .mul_vec(&pair.ritz_vector)
        .sub(&pair.ritz_vector.scale(pair.value))
        .norm();
    SolveOutcome {
        eigenpair: Eigenpair {
            value: pair.value,
            vector: pair.ritz_vector.clone(),
            residual_norm,
            relative_residual: residual_norm / scale,
        },
        iterations,
        converged,
        trace,
    }
}

fn defect_flags(t: &DenseMatrix, lambda: C64, tol: &Tolerance) -> (bool, (usize, usize)) {
    match is_defective(t, lambda, tol) {
        Ok(d) => (d.defective, (d.nullity1, d.nullity2)),
        Err(_) => (false, (0, 0)),
    }
}

/// `V·orth(Y)` for the given coefficient vectors.
fn compress(
    v: &DenseMatrix,
    coeffs: impl Iterator<Item = Vector>,
    tol: &Tolerance,
) -> Result<DenseMatrix, SolverError> {
    let y = DenseMatrix::from_columns(&coeffs.collect::<Vec<_>>());
    let y = orthonormalize(&y, tol)?.q;
    Ok(v.matmul(&y))
}

/// Two passes of classical Gram-Schmidt against orthonormal `v`; `None` when
/// the direction collapses.
fn orthogonalize_against(v: &DenseMatrix, x: &Vector) -> Option<Vector> {
    let before = x.norm();
    if before == 0.0 || !x.is_finite() {
        return None;
    }
    let mut y = x.clone();
    for _ in 0..2 {
        y = y.sub(&v.mul_vec(&v.adjoint_mul_vec(&y)));
    }
    if y.norm() <= COLLAPSE * before {
        return None;
    }
    y.normalized()
}

/// Correction for a shift that is numerically an eigenvalue: the
/// classification cannot run, but the complement system usually still has a
/// unique solution.
fn near_eigenvalue(
    d: &mut SideDiagnostics,
    e: CorrectionError,
    sol: Result<Vector, CorrectionError>,
    triviality: impl FnOnce(&Vector) -> Option<(bool, f64)>,
) -> (SideDiagnostics, Option<Vector>) {
    let v = match sol {
        Ok(v) if v.norm() > 0.0 && v.is_finite() => v,
        Ok(_) => {
            d.note = Some(format!("classification failed: {e}; complement solve returned zero"));
            return (d.clone(), None);
        }
        Err(c) => {
            d.note = Some(format!("classification failed: {e}; complement solve failed: {c}"));
            return (d.clone(), None);
        }
    };
    d.note = Some(format!("classification skipped: {e}; solved on the complement"));
    match triviality(&v) {
        Some((trivial, resid)) => {
            record_triviality(d, trivial, resid);
            (d.clone(), Some(v))
        }
        None => {
            record_triviality(d, true, 0.0);
            (d.clone(), None)
        }
    }
}

fn record_class(d: &mut SideDiagnostics, report: &SolvabilityReport) {
    d.class = Some(report.class);
    d.witness_magnitude = Some(report.witness_magnitude);
}

fn record_stagnation(d: &mut SideDiagnostics, rep: Result<StagnationReport, StagnationError>) {
    match rep {
        Ok(s) => {
            d.stagnates = Some(s.stagnates);
            d.stagnation_residual = Some(s.predicate_value);
            d.implication_holds = Some(s.implication_holds());
            if !s.forms_agree {
                d.predicate_mismatch = true;
            }
        }
        Err(e) => {
            d.note
                .get_or_insert_with(|| format!("stagnation predicate unavailable: {e}"));
        }
    }
}

fn record_triviality(d: &mut SideDiagnostics, trivial: bool, residual: f64) {
    d.trivial = Some(trivial);
    d.trivial_residual = Some(residual);
    if d.stagnates.is_some_and(|s| s != trivial) {
        d.predicate_mismatch = true;
    }
}

fn correction_note(e: &CorrectionError) -> String {
    format!("correction solve failed: {e}")
}

/// Classifies, solves and diagnoses the correction for the best Ritz pair.
fn one_sided_correction(
    a: &DenseMatrix,
    basis: &SearchBasis,
    pairs: &[RitzPair],
    cfg: &SolverConfig,
) -> (SideDiagnostics, Option<Vector>) {
    let tol = &cfg.tolerances;
    let pair = &pairs[0];
    let u = &pair.ritz_vector;
    let mut d = SideDiagnostics::default();
    let w = match cfg.variant {
        SolverVariant::Standard => None,
        SolverVariant::FullSubspace => Some(basis.matrix().clone()),
        _ if cfg.subspace_dim >= basis.dim() => Some(basis.matrix().clone()),
        _ => {
            let cols: Vec<Vector> = pairs
                .iter()
                .take(cfg.subspace_dim)
                .map(|p| p.ritz_vector.clone())
                .collect();
            match orthonormalize(&DenseMatrix::from_columns(&cols), tol) {
                Ok(o) => Some(o.q),
                Err(e) => {
                    d.note = Some(format!("could not form W: {e}"));
                    return (d, None);
                }
            }
        }
    };

    let report = match &w {
        None => classify_standard(a, pair.value, u, tol),
        Some(w) => classify_subspace(a, pair.value, w, u, tol),
    };
    let report = match report {
        Ok(r) => r,
        Err(e @ CorrectionError::SingularShift { .. }) => {
            let w = w.unwrap_or_else(|| DenseMatrix::from_column(u));
            let sol = solve_on_complement(a, pair.value, &w, &pair.residual, tol);
            return near_eigenvalue(&mut d, e, sol, |v| {
                expansion_is_trivial(v, basis, tol)
                    .map(|t| (t.trivial, t.residual))
                    .ok()
            });
        }
        Err(e) => {
            d.note = Some(format!("classification failed: {e}"));
            return (d, None);
        }
    };
    record_class(&mut d, &report);
    if report.class == Solvability::NoSolution {
        return (d, None);
    }
    if report.class == Solvability::Unique {
        let rep = match &w {
            None => stagnation_predicate_standard(a, pair.value, basis, u, tol),
            Some(w) => stagnation_predicate_subspace(a, pair.value, basis, w, u, tol),
        };
        record_stagnation(&mut d, rep);
    }
    let sol = match &w {
        None => solve_standard(a, pair.value, u, &pair.residual, tol),
        Some(w) => solve_subspace(a, pair.value, w, &pair.residual, tol, SubspaceMode::MinNorm),
    };
    match sol {
        Ok(s) => match expansion_is_trivial(&s.v, basis, tol) {
            Ok(t) => {
                record_triviality(&mut d, t.trivial, t.residual);
                (d, Some(s.v))
            }
            Err(_) => {
                record_triviality(&mut d, true, 0.0);
                (d, None)
            }
        },
        Err(e) => {
            d.note = Some(correction_note(&e));
            (d, None)
        }
    }
}

/// Runs the two-sided method (variant [`SolverVariant::Bi`] or
/// [`SolverVariant::Orth`]) from starting vectors `q0` and `p0`.
pub fn jd_solve_two_sided(
    a: &DenseMatrix,
    q0: &Vector,
    p0: &Vector,
    cfg: &SolverConfig,
) -> Result<TwoSidedOutcome, SolverError> {
    check_square(a)?;
    let n = a.rows();
    for x in [q0, p0] {
        if x.len() != n {
            return Err(SolverError::DimensionMismatch {
                expected: n,
                found: x.len(),
            });
        }
    }
    let bi = match cfg.variant {
        SolverVariant::Bi => true,
        SolverVariant::Orth => false,
        _ => {
            return Err(SolverError::InvalidConfig(
                "the two-sided solver needs the bi or orth variant".into(),
            ))
        }
    };
    let (m_max, keep) = cfg.effective_limits(n)?;
    let tol = &cfg.tolerances;
    let (qn, pn) = (q0.norm(), p0.norm());
    if qn == 0.0 || pn == 0.0 {
        return Err(SolverError::ZeroStart);
    }
    let overlap = p0.dot(q0).norm() / (qn * pn);
    if overlap <= BREAKDOWN {
        return Err(SolverError::BiorthBreakdown { overlap, partial: None });
    }
    let q1 = q0.scale_real(1.0 / qn);
    let mut p1 = p0.scale_real(1.0 / pn);
    if bi {
        p1 = p1.scale(C64::new(1.0, 0.0) / q1.dot(&p1));
    }
    let mut qb = DenseMatrix::from_column(&q1);
    let mut pb = DenseMatrix::from_column(&p1);
    let kinds = if bi {
        (TwoSidedKind::BiRight, TwoSidedKind::BiLeft)
    } else {
        (TwoSidedKind::OrthRight, TwoSidedKind::OrthLeft)
    };
    let anorm = a.norm_fro();
    let scale = if anorm > 0.0 { anorm } else { 1.0 };
    let mut trace = IterationTrace::default();
    let mut last = None;

    let finish = |triple: &PetrovTriple, iterations: usize, converged: bool, trace: IterationTrace| TwoSidedOutcome {
        theta: triple.theta,
        q: triple.q.clone(),
        p: triple.p.clone(),
        right_residual: triple.right_residual_norm(),
        left_residual: triple.left_residual_norm(),
        iterations,
        converged,
        trace,
    };
    let breakdown = |e: RitzError, partial: Option<Box<Partial>>| match e {
        RitzError::SingularPencil => SolverError::BiorthBreakdown { overlap: 0.0, partial },
        other => other.into(),
    };

    for iteration in 1..=cfg.max_outer {
        let partial = |trace: &IterationTrace, last: &Option<PetrovTriple>| {
            last.as_ref()
                .map(|t| Box::new(Partial::TwoSided(finish(t, iteration - 1, false, trace.clone()))))
        };
        let (mut triple, mut pencil) =
            extract_two_sided(a, &qb, &pb, cfg.target, tol).map_err(|e| breakdown(e, partial(&trace, &last)))?;
        let mut restarted = false;
        let resid = triple.right_residual_norm().max(triple.left_residual_norm());
        if qb.cols() >= m_max && resid > cfg.conv_tol * scale && qb.cols() > keep {
            let (nq, np) = restart_two_sided(&qb, &pb, &pencil.right, cfg.target, keep, bi, tol)
                .map_err(|e| breakdown(e, partial(&trace, &last)))?;
            qb = nq;
            pb = np;
            (triple, pencil) =
                extract_two_sided(a, &qb, &pb, cfg.target, tol).map_err(|e| breakdown(e, partial(&trace, &last)))?;
            restarted = true;
        }
        let (defective, nullities) = defect_flags(&pencil.right, triple.theta, tol);
        let mut row = TraceRow {
            iteration,
            basis_dim: qb.cols(),
            ritz_value: triple.theta,
            residual_norm: triple.right_residual_norm(),
            left_residual_norm: Some(triple.left_residual_norm()),
            defective,
            nullities,
            action: ExpansionAction::Converged,
            right: SideDiagnostics::default(),
            left: None,
        };
        last = Some(triple.clone());
        if triple.right_residual_norm().max(triple.left_residual_norm()) <= cfg.conv_tol * scale {
            trace.rows.push(row);
            return Ok(finish(&triple, iteration, true, trace));
        }

        let (rd, s) = two_sided_correction(a, &qb, &pb, &triple, kinds.0, &triple.right_residual, tol);
        let (ld, t) = two_sided_correction(a, &qb, &pb, &triple, kinds.1, &triple.left_residual, tol);
        row.right = rd;
        row.left = Some(ld);

        let mut chosen = Vec::with_capacity(2);
        let mut dirs = Vec::with_capacity(2);
        for (side, cand, resid) in [(0, s, &triple.right_residual), (1, t, &triple.left_residual)] {
            let d = if side == 0 {
                &mut row.right
            } else {
                row.left.as_mut().expect("left diagnostics")
            };
            let gated = d.stagnates == Some(true) || d.trivial == Some(true);
            match cand.filter(|_| !gated) {
                Some(c) => {
                    chosen.push(Expansion::Correction);
                    dirs.push(c);
                }
                None => {
                    if cfg.fallback == Fallback::Abort {
                        let reason = fallback_reason(d);
                        row.action = ExpansionAction::Failed;
                        trace.rows.push(row);
                        return Err(SolverError::Aborted {
                            iteration,
                            reason,
                            partial: Box::new(Partial::TwoSided(finish(&triple, iteration, false, trace))),
                        });
                    }
                    chosen.push(Expansion::Residual);
                    dirs.push(resid.clone());
                }
            }
        }
        let expanded = if bi {
            expand_bi(&qb, &pb, &dirs[0], &dirs[1])
        } else {
            expand_orth(&qb, &pb, &dirs[0], &dirs[1])
        };
        match expanded {
            Ok((nq, np)) => {
                qb.push_column(&nq);
                pb.push_column(&np);
            }
            Err(overlap) => {
                // Retry with residual directions on the sides that used corrections.
                let fallback = if bi {
                    expand_bi(&qb, &pb, &triple.right_residual, &triple.left_residual)
                } else {
                    expand_orth(&qb, &pb, &triple.right_residual, &triple.left_residual)
                };
                match fallback {
                    Ok((nq, np)) if cfg.fallback == Fallback::ResidualExpansion => {
                        chosen = vec![Expansion::Residual, Expansion::Residual];
                        qb.push_column(&nq);
                        pb.push_column(&np);
                    }
                    _ => {
                        row.action = ExpansionAction::Failed;
                        trace.rows.push(row);
                        let partial = Box::new(Partial::TwoSided(finish(&triple, iteration, false, trace)));
                        return Err(match overlap {
                            Some(o) => SolverError::BiorthBreakdown {
                                overlap: o,
                                partial: Some(partial),
                            },
                            None => SolverError::FallbackExhausted { iteration, partial },
                        });
                    }
                }
            }
        }
        row.right.expansion = Some(chosen[0]);
        row.left.as_mut().expect("left diagnostics").expansion = Some(chosen[1]);
        row.action = action_for(restarted, &chosen);
        trace.rows.push(row);
    }
    let triple = last.expect("at least one iteration");
    let iterations = cfg.max_outer;
    Err(SolverError::MaxIterations {
        iterations,
        partial: Box::new(Partial::TwoSided(finish(&triple, iterations, false, trace))),
    })
}

/// Diagnoses and solves one of the two correction equations of a two-sided
/// iteration. The triviality check measures distance from `span Q` for right
/// forms and `span P` for left forms.
fn two_sided_correction(
    a: &DenseMatrix,
    qb: &DenseMatrix,
    pb: &DenseMatrix,
    triple: &PetrovTriple,
    kind: TwoSidedKind,
    rhs: &Vector,
    tol: &Tolerance,
) -> (SideDiagnostics, Option<Vector>) {
    let mut d = SideDiagnostics::default();
    let (q, p, theta) = (&triple.q, &triple.p, triple.theta);
    match classify_two_sided(a, theta, q, p, kind, tol) {
        Ok(r) => record_class(&mut d, &r),
        Err(e @ CorrectionError::SingularShift { .. }) => {
            let sol = solve_two_sided_on_complement(a, theta, q, p, kind, rhs, tol);
            let space = if kind.is_left() { pb } else { qb };
            return near_eigenvalue(&mut d, e, sol, |v| {
                let o = orthonormalize(space, tol).ok()?;
                let resid = v.sub(&o.q.mul_vec(&o.q.adjoint_mul_vec(v))).norm() / v.norm();
                Some((resid <= tol.membership_tol, resid))
            });
        }
        Err(e) => {
            d.note = Some(format!("classification failed: {e}"));
            return (d, None);
        }
    }
    if d.class != Some(Solvability::Unique) {
        return (d, None);
    }
    record_stagnation(
        &mut d,
        stagnation_predicate_two_sided(a, theta, qb, pb, q, p, kind, tol),
    );
    match solve_two_sided(a, theta, q, p, kind, rhs, tol) {
        Ok(s) => {
            let space = if kind.is_left() { pb } else { qb };
            let vn = s.v.norm();
            match orthonormalize(space, tol) {
                Ok(o) if vn > 0.0 => {
                    let resid = s.v.sub(&o.q.mul_vec(&o.q.adjoint_mul_vec(&s.v))).norm() / vn;
                    let trivial = resid <= tol.membership_tol;
                    record_triviality(&mut d, trivial, resid);
                    (d, Some(s.v))
                }
                _ => {
                    record_triviality(&mut d, true, 0.0);
                    (d, None)
                }
            }
        }
        Err(e) => {
            d.note = Some(correction_note(&e));
            (d, None)
        }
    }
}

/// Bi-orthogonal expansion: `s ← s − Q(Pᴴs)`, `t ← t − P(Qᴴt)` twice, then
/// scaled so the new pair satisfies `pᴴq = 1`. `Err(Some(overlap))` signals a
/// breakdown, `Err(None)` a collapsed direction.
fn expand_bi(qb: &DenseMatrix, pb: &DenseMatrix, s: &Vector, t: &Vector) -> Result<(Vector, Vector), Option<f64>> {
    let (s0, t0) = (s.norm(), t.norm());
    if s0 == 0.0 || t0 == 0.0 {
        return Err(None);
    }
    let (mut s, mut t) = (s.clone(), t.clone());
    for _ in 0..2 {
        s = s.sub(&qb.mul_vec(&pb.adjoint_mul_vec(&s)));
        t = t.sub(&pb.mul_vec(&qb.adjoint_mul_vec(&t)));
    }
    let (sn, tn) = (s.norm(), t.norm());
    if sn <= COLLAPSE * s0 || tn <= COLLAPSE * t0 {
        return Err(None);
    }
    let q = s.scale_real(1.0 / sn);
    let t = t.scale_real(1.0 / tn);
    let c = t.dot(&q);
    if c.norm() <= BREAKDOWN {
        return Err(Some(c.norm()));
    }
    Ok((q, t.scale(C64::new(1.0, 0.0) / c.conj())))
}

/// Orthonormal expansion of each basis separately.
fn expand_orth(qb: &DenseMatrix, pb: &DenseMatrix, s: &Vector, t: &Vector) -> Result<(Vector, Vector), Option<f64>> {
    let q = orthogonalize_against(qb, s).ok_or(None)?;
    let p = orthogonalize_against(pb, t).ok_or(None)?;
    let mut qb2 = qb.clone();
    qb2.push_column(&q);
    let mut pb2 = pb.clone();
    pb2.push_column(&p);
    let g = pb2.adjoint_mul(&qb2);
    let d = svd(&g).map_err(|_| None)?;
    if d.sigma_min() <= BREAKDOWN * d.sigma_max() {
        return Err(Some(d.sigma_min()));
    }
    Ok((q, p))
}

/// Thick restart keeping the `keep` right eigenvectors of `T_right` nearest
/// the target and the matching left vectors.
fn restart_two_sided(
    qb: &DenseMatrix,
    pb: &DenseMatrix,
    t_right: &DenseMatrix,
    target: C64,
    keep: usize,
    bi: bool,
    tol: &Tolerance,
) -> Result<(DenseMatrix, DenseMatrix), RitzError> {
    let pairs = small_eig(t_right)?;
    let tie = 1e-12 * (t_right.norm_fro() + target.norm()).max(f64::MIN_POSITIVE);
    let ranked = rank_by(pairs, |p| ((p.value - target).norm(), 0.0), tie);
    let y = DenseMatrix::from_columns(&ranked.iter().take(keep).map(|p| p.vector.clone()).collect::<Vec<_>>());
    let y = orthonormalize(&y, tol)?.q;
    let g = pb.adjoint_mul(qb);
    let z = left_partner(
        t_right,
        &g,
        &ranked.iter().take(keep).map(|p| p.value).collect::<Vec<_>>(),
    )?;
    let z = orthonormalize(&z, tol)?.q;
    let nq = qb.matmul(&y);
    let np = pb.matmul(&z);
    if bi {
        let g2 = np.adjoint_mul(&nq);
        let fix =
            lu_solve(&g2.adjoint(), &DenseMatrix::identity(g2.rows()), tol).map_err(|_| RitzError::SingularPencil)?;
        Ok((nq, np.matmul(&fix)))
    } else {
        let nq = orthonormalize(&nq, tol)?.q;
        let np = orthonormalize(&np, tol)?.q;
        Ok((nq, np))
    }
}

/// Coefficients `Z` of the left Ritz vectors: for each kept value `θ`, the
/// left null vector of `PᴴAQ − θPᴴQ = G(T_right − θI)`, i.e. the null vector of
/// `(T_right − θI)ᴴGᴴ`.
fn left_partner(t_right: &DenseMatrix, g: &DenseMatrix, values: &[C64]) -> Result<DenseMatrix, RitzError> {
    let mut cols = Vec::with_capacity(values.len());
    for &theta in values {
        let m = g.matmul(&t_right.shifted(theta)).adjoint();
        let d = svd(&m)?;
        cols.push(d.v.column(d.v.cols() - 1));
    }
    Ok(DenseMatrix::from_columns(&cols))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::ONE;

    #[test]
    fn diagonal_converges_to_smallest() {
        let a = fixtures::diagonal_range(10);
        let cfg = SolverConfig {
            target: ONE,
            ..SolverConfig::default()
        };
        let out = jd_solve(&a, &Vector::ones(10), &cfg).unwrap();
        assert!(out.converged);
        assert!((out.eigenpair.value - ONE).norm() < 1e-9);
        assert!(out.eigenpair.residual_norm <= 1e-9 * a.norm_fro());
    }

    #[test]
    fn first_example_falls_back() {
        let ex = fixtures::example1();
        let cfg = SolverConfig {
            target: ex.target,
            ..SolverConfig::default()
        };
        let out = jd_solve_from_basis(&ex.a, &ex.basis, &cfg).unwrap();
        let row = &out.trace.rows[0];
        assert_eq!(row.right.class, Some(Solvability::NoSolution));
        assert_eq!(row.right.expansion, Some(Expansion::Residual));
        assert_eq!(row.action, ExpansionAction::ResidualVector);
    }

    #[test]
    fn second_example_stagnates_first() {
        let ex = fixtures::example2();
        let cfg = SolverConfig {
            target: ex.target,
            ..SolverConfig::default()
        };
        let out = jd_solve_from_basis(&ex.a, &ex.basis, &cfg).unwrap();
        let row = &out.trace.rows[0];
        assert_eq!(row.right.class, Some(Solvability::Unique));
        assert_eq!(row.right.stagnates, Some(true));
        assert_eq!(row.right.trivial, Some(true));
        assert!(row.defective);
        assert_eq!(row.action, ExpansionAction::ResidualVector);
        assert!(out.converged);

        let abort = SolverConfig {
            fallback: Fallback::Abort,
            ..cfg
        };
        let err = jd_solve_from_basis(&ex.a, &ex.basis, &abort).unwrap_err();
        assert!(matches!(err, SolverError::Aborted { iteration: 1, .. }));
        assert_eq!(err.trace().unwrap().len(), 1);
    }

    #[test]
    fn laplacian_smallest_eigenvalue() {
        let n = 100;
        let a = fixtures::laplacian_1d(n);
        let cfg = SolverConfig {
            max_outer: 60,
            ..SolverConfig::default()
        };
        let out = jd_solve(&a, &Vector::ones(n), &cfg).unwrap();
        let exact = 4.0 * (std::f64::consts::PI / (2.0 * (n as f64 + 1.0))).sin().powi(2);
        assert!(
            (out.eigenpair.value.re - exact).abs() < 1e-8,
            "{:?} vs {exact}",
            out.eigenpair.value
        );
        assert!(out.eigenpair.relative_residual <= 1e-10);
    }

    #[test]
    fn restart_keeps_basis_bounded() {
        let a = fixtures::laplacian_1d(30);
        let cfg = SolverConfig {
            m_max: 5,
            restart_keep: 2,
            ..SolverConfig::default()
        };
        let out = jd_solve(&a, &Vector::ones(30), &cfg).unwrap();
        assert!(out.trace.rows.iter().all(|r| r.basis_dim <= 5));
        assert!(out.converged);
    }

    #[test]
    fn subspace_variants_converge() {
        let mut rng = fixtures::seeded_rng(7);
        let a = fixtures::random_matrix(&mut rng, 12, 12);
        for variant in [SolverVariant::Subspace, SolverVariant::FullSubspace] {
            let cfg = SolverConfig {
                variant,
                ..SolverConfig::default()
            };
            let out = jd_solve(&a, &Vector::ones(12), &cfg).unwrap();
            assert!(out.converged, "{variant:?}");
            if variant == SolverVariant::FullSubspace {
                assert_eq!(out.trace.stagnation_events(), 0);
            }
        }
    }

    #[test]
    fn two_sided_hermitian_matches_one_sided() {
        let mut rng = fixtures::seeded_rng(9);
        let a = fixtures::random_hermitian(&mut rng, 12);
        let v0 = fixtures::random_vector(&mut rng, 12);
        let cfg = SolverConfig::default();
        let one = jd_solve(&a, &v0, &cfg).unwrap();
        let two = jd_solve_two_sided(
            &a,
            &v0,
            &v0,
            &SolverConfig {
                variant: SolverVariant::Bi,
                ..cfg
            },
        )
        .unwrap();
        assert_eq!(one.trace.len(), two.trace.len());
        for (x, y) in one.trace.ritz_values().iter().zip(two.trace.ritz_values()) {
            assert!((x - y).norm() <= 1e-10, "{x} vs {y}");
        }
    }

    #[test]
    fn two_sided_nonnormal_converges() {
        let mut rng = fixtures::seeded_rng(10);
        let a = fixtures::random_matrix(&mut rng, 8, 8);
        let q0 = fixtures::random_vector(&mut rng, 8);
        let p0 = fixtures::random_vector(&mut rng, 8);
        for variant in [SolverVariant::Bi, SolverVariant::Orth] {
            let cfg = SolverConfig {
                variant,
                ..SolverConfig::default()
            };
            let out = jd_solve_two_sided(&a, &q0, &p0, &cfg).unwrap();
            assert!(out.converged, "{variant:?}");
            let pq = out.p.dot(&out.q);
            let resid = (out.p.dot(&a.mul_vec(&out.q)) - out.theta * pq).norm();
            assert!(resid <= 1e-9 * a.norm_fro());
        }
    }

    #[test]
    fn orthogonal_start_breaks_down() {
        let a = fixtures::diagonal_range(4);
        let cfg = SolverConfig {
            variant: SolverVariant::Bi,
            ..SolverConfig::default()
        };
        let err = jd_solve_two_sided(&a, &Vector::unit(4, 0), &Vector::unit(4, 1), &cfg).unwrap_err();
        assert!(matches!(err, SolverError::BiorthBreakdown { .. }));
    }
}
