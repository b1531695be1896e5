//! Stagnation predicates for the correction equations and the
//! defectiveness implication.
//!
//! An expansion stagnates when the correction `v` lies in the current search
//! space. Every predicate below decides this without forming `v`, and each one
//! carries a second, independent form of the same test so disagreements can be
//! surfaced.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correction::{
    classify_standard, classify_subspace, classify_two_sided, CorrectionError, Solvability, TwoSidedKind,
};
use crate::linalg::{
    in_range, lu_solve, orthonormal_complement, orthonormalize, DenseMatrix, LinalgError, Lu, Tolerance, Vector, C64,
};
use crate::ritz::{is_defective, rotate_basis_first, ProjectedMatrix, RitzError, SearchBasis};

/// Membership of `u` in `span V` accepted by the predicates, relative to `‖u‖`.
const SPAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StagnationError {
    #[error(transparent)]
    Linalg(LinalgError),
    #[error(transparent)]
    Ritz(RitzError),
    #[error(transparent)]
    Correction(CorrectionError),
    #[error("the correction equation has no solution (witness magnitude {witness:.3e})")]
    Inconsistent { witness: f64 },
    #[error("the witness matrix is singular (σ_min = {sigma_min:.3e})")]
    SingularWitness { sigma_min: f64 },
    #[error("bi-orthogonality breakdown: PᴴQ is singular")]
    BiorthBreakdown,
    #[error("vector is zero")]
    ZeroVector,
    #[error("the pair has converged (‖r‖ = {residual:.3e}); stagnation is undefined")]
    Converged { residual: f64 },
    #[error("vector is not in the search space (distance {distance:.3e})")]
    NotInSpan { distance: f64 },
    #[error("residual is not orthogonal to the search space (‖Vᴴr‖ = {defect:.3e})")]
    ResidualNotOrthogonal { defect: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

impl From<LinalgError> for StagnationError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::DimensionMismatch { expected, found } => Self::DimensionMismatch { expected, found },
            other => Self::Linalg(other),
        }
    }
}

impl From<RitzError> for StagnationError {
    fn from(e: RitzError) -> Self {
        match e {
            RitzError::Linalg(l) => l.into(),
            RitzError::DimensionMismatch { expected, found } => Self::DimensionMismatch { expected, found },
            other => Self::Ritz(other),
        }
    }
}

impl From<CorrectionError> for StagnationError {
    fn from(e: CorrectionError) -> Self {
        match e {
            CorrectionError::Linalg(l) => l.into(),
            CorrectionError::Inconsistent { witness } => Self::Inconsistent { witness },
            CorrectionError::BiorthBreakdown { .. } => Self::BiorthBreakdown,
            CorrectionError::DimensionMismatch { expected, found } => Self::DimensionMismatch { expected, found },
            other => Self::Correction(other),
        }
    }
}

/// Which predicate produced a [`StagnationReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StagnationMethod {
    /// `‖V̂₃B₂₂V̂₃ᴴr‖ ≤ tol·‖r‖`.
    NullspaceForm,
    /// `u ∈ range((A − λI)V)`.
    SpanCriterion,
    /// `W·M⁻¹·Wᴴu ∈ range((A − λI)V)`.
    Subspace,
    /// `(A − θI)⁻¹q` (or its left analog) in the search space.
    TwoSided(TwoSidedKind),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagnationReport {
    pub stagnates: bool,
    /// Relative membership residual of the deciding test.
    pub predicate_value: f64,
    pub method: StagnationMethod,
    /// Whether `λ` is a defective eigenvalue of the projected matrix.
    pub defective: bool,
    /// Nullities of `T − λI` and `(T − λI)²`; `(0, 0)` when `λ` is not an
    /// eigenvalue of `T`.
    pub nullities: (usize, usize),
    /// Relative residual of the independent second form of the test.
    pub cross_check_value: f64,
    /// Whether both forms reached the same decision.
    pub forms_agree: bool,
    /// Whether the basis had to be rotated to put `u` first.
    pub rotated: bool,
}

impl StagnationReport {
    /// `¬stagnates ∨ defective`.
    pub fn implication_holds(&self) -> bool {
        !self.stagnates || self.defective
    }
}

/// Outcome of [`expansion_is_trivial`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrivialityCheck {
    pub trivial: bool,
    /// `‖v − VVᴴv‖ / ‖v‖`.
    pub residual: f64,
}

/// True iff `‖v − VVᴴv‖ ≤ membership_tol · ‖v‖`.
pub fn expansion_is_trivial(
    v: &Vector,
    basis: &SearchBasis,
    tol: &Tolerance,
) -> Result<TrivialityCheck, StagnationError> {
    tol.validate()?;
    if v.len() != basis.ambient_dim() {
        return Err(StagnationError::DimensionMismatch {
            expected: basis.ambient_dim(),
            found: v.len(),
        });
    }
    let vn = v.norm();
    if vn == 0.0 {
        return Err(StagnationError::ZeroVector);
    }
    let residual = basis.distance(v) / vn;
    Ok(TrivialityCheck {
        trivial: residual <= tol.membership_tol,
        residual,
    })
}

/// Blocks of `[U⊥ᴴ(A − λI)U⊥]⁻¹` for `U⊥ = [V̂₂, V̂₃]`, where `V̂ = [u, V̂₂]`
/// and `V̂₃` spans the orthogonal complement of `span V`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDecomposition {
    /// `(k−1)×(k−1)`.
    pub b11: DenseMatrix,
    pub b12: DenseMatrix,
    pub b21: DenseMatrix,
    /// `(n−k)×(n−k)`.
    pub b22: DenseMatrix,
    /// `V̂`, with `u` as its first column.
    pub rotated: DenseMatrix,
    /// `V̂₃`.
    pub complement: DenseMatrix,
    /// `U⊥ᴴ(A − λI)U⊥`.
    pub compressed: DenseMatrix,
}

impl BlockDecomposition {
    /// `[[B₁₁, B₁₂], [B₂₁, B₂₂]]`.
    pub fn reassembled(&self) -> DenseMatrix {
        let (k1, m) = (self.b11.rows(), self.b22.rows());
        let mut out = DenseMatrix::zeros(k1 + m, k1 + m);
        let place = |out: &mut DenseMatrix, blk: &DenseMatrix, r0: usize, c0: usize| {
            for j in 0..blk.cols() {
                for i in 0..blk.rows() {
                    out[(r0 + i, c0 + j)] = blk[(i, j)];
                }
            }
        };
        place(&mut out, &self.b11, 0, 0);
        place(&mut out, &self.b12, 0, k1);
        place(&mut out, &self.b21, k1, 0);
        place(&mut out, &self.b22, k1, k1);
        out
    }

    /// `V̂₃B₂₂V̂₃ᴴ`.
    pub fn range_projector(&self) -> DenseMatrix {
        self.complement.matmul(&self.b22).matmul(&self.complement.adjoint())
    }

    /// `U⊥ = [V̂₂, V̂₃]`.
    pub fn u_perp(&self) -> DenseMatrix {
        self.rotated.columns(1, self.rotated.cols()).hcat(&self.complement)
    }
}

/// Coefficients of `u` in `V`, rejecting `u ∉ span V`.
fn coefficients(basis: &SearchBasis, u: &Vector) -> Result<Vector, StagnationError> {
    if u.len() != basis.ambient_dim() {
        return Err(StagnationError::DimensionMismatch {
            expected: basis.ambient_dim(),
            found: u.len(),
        });
    }
    let un = u.norm();
    if un == 0.0 {
        return Err(StagnationError::ZeroVector);
    }
    let distance = basis.distance(u);
    if distance > SPAN_TOL * un {
        return Err(StagnationError::NotInSpan { distance });
    }
    Ok(basis.matrix().adjoint_mul_vec(u))
}

/// Rejects converged pairs: `‖r‖ ≤ membership_tol · ‖A‖_F`.
fn check_not_converged(a: &DenseMatrix, r: &Vector, tol: &Tolerance) -> Result<(), StagnationError> {
    let rn = r.norm();
    if rn <= tol.membership_tol * a.norm_fro() {
        return Err(StagnationError::Converged { residual: rn });
    }
    Ok(())
}

/// Defectiveness of `λ` in `T`; a value that is not an eigenvalue of `T` is
/// reported as non-defective with nullities `(0, 0)`.
fn defectiveness(t: &DenseMatrix, lambda: C64, tol: &Tolerance) -> Result<(bool, (usize, usize)), StagnationError> {
    match is_defective(t, lambda, tol) {
        Ok(d) => Ok((d.defective, (d.nullity1, d.nullity2))),
        Err(RitzError::NotAnEigenvalue { .. }) => Ok((false, (0, 0))),
        Err(e) => Err(e.into()),
    }
}

fn require_unique(class: Solvability, witness: f64) -> Result<(), StagnationError> {
    match class {
        Solvability::Unique => Ok(()),
        Solvability::NoSolution => Err(StagnationError::Inconsistent { witness }),
        Solvability::Infinite => Err(StagnationError::SingularWitness { sigma_min: witness }),
    }
}

/// `‖x − VVᴴx‖ / ‖x‖` for orthonormal `V`.
fn span_distance(v: &DenseMatrix, x: &Vector) -> f64 {
    let xn = x.norm();
    if xn == 0.0 {
        return 0.0;
    }
    x.sub(&v.mul_vec(&v.adjoint_mul_vec(x))).norm() / xn
}

/// Builds the block decomposition of `[U⊥ᴴ(A − λI)U⊥]⁻¹` after rotating `V`
/// so that `u` is its first column.
pub fn block_decomposition(
    a: &DenseMatrix,
    lambda: C64,
    basis: &SearchBasis,
    u: &Vector,
    tol: &Tolerance,
) -> Result<BlockDecomposition, StagnationError> {
    let y = coefficients(basis, u)?;
    let y = y.normalized().ok_or(StagnationError::ZeroVector)?;
    let rotated = rotate_basis_first(basis, &y)?.into_matrix();
    let (n, k) = (rotated.rows(), rotated.cols());
    let complement = orthonormal_complement(&rotated)?;
    let u_perp = rotated.columns(1, k).hcat(&complement);
    let compressed = u_perp.adjoint_mul(&a.shifted(lambda).matmul(&u_perp));
    let inv = Lu::factor(&compressed, tol)
        .map_err(|e| match e {
            LinalgError::SingularMatrix { pivot, .. } => StagnationError::Inconsistent { witness: pivot },
            other => other.into(),
        })?
        .inverse();
    let k1 = k - 1;
    let m = n - 1;
    Ok(BlockDecomposition {
        b11: inv.block(0, k1, 0, k1),
        b12: inv.block(0, k1, k1, m),
        b21: inv.block(k1, m, 0, k1),
        b22: inv.block(k1, m, k1, m),
        rotated,
        complement,
        compressed,
    })
}

/// Null-space form: stagnates iff `‖V̂₃B₂₂V̂₃ᴴr‖ ≤ membership_tol · ‖r‖`.
///
/// `u` must lie in `span V`, `r` must be orthogonal to it, and the standard
/// correction equation must have a unique solution. The cross-check is
/// `u ∈ range((A − λI)V)`.
pub fn stagnation_nullspace_form(
    a: &DenseMatrix,
    lambda: C64,
    basis: &SearchBasis,
    u: &Vector,
    r: &Vector,
    tol: &Tolerance,
) -> Result<(StagnationReport, BlockDecomposition), StagnationError> {
    tol.validate()?;
    let u = u.normalized().ok_or(StagnationError::ZeroVector)?;
    if r.len() != a.rows() {
        return Err(StagnationError::DimensionMismatch {
            expected: a.rows(),
            found: r.len(),
        });
    }
    check_not_converged(a, r, tol)?;
    let class = classify_standard(a, lambda, &u, tol)?;
    require_unique(class.class, class.witness_magnitude)?;
    let defect = basis.matrix().adjoint_mul_vec(r).norm();
    if defect > SPAN_TOL * (a.norm_fro() + r.norm()) {
        return Err(StagnationError::ResidualNotOrthogonal { defect });
    }
    let blocks = block_decomposition(a, lambda, basis, &u, tol)?;
    let y = basis.matrix().adjoint_mul_vec(&u);
    let rotated = blocks.rotated != *basis.matrix() || (y.sub(&Vector::unit(y.len(), 0))).norm() > 0.0;

    let pr = blocks.range_projector().mul_vec(r);
    let predicate_value = pr.norm() / r.norm();
    let stagnates = predicate_value <= tol.membership_tol;

    let bv = a.shifted(lambda).matmul(basis.matrix());
    let cross = in_range(&bv, &u, tol)?;
    let t = ProjectedMatrix::new(a, basis)?;
    let (defective, nullities) = defectiveness(t.matrix(), lambda, tol)?;
    Ok((
        StagnationReport {
            stagnates,
            predicate_value,
            method: StagnationMethod::NullspaceForm,
            defective,
            nullities,
            cross_check_value: cross.relative,
            forms_agree: cross.in_range == stagnates,
            rotated,
        },
        blocks,
    ))
}

/// Span criterion: stagnates iff `u ∈ range((A − λI)V)`, cross-checked by
/// `(A − λI)⁻¹u ∈ span V`.
pub fn stagnation_predicate_standard(
    a: &DenseMatrix,
    lambda: C64,
    basis: &SearchBasis,
    u: &Vector,
    tol: &Tolerance,
) -> Result<StagnationReport, StagnationError> {
    tol.validate()?;
    coefficients(basis, u)?;
    let u = u.normalized().ok_or(StagnationError::ZeroVector)?;
    let r = a.mul_vec(&u).sub(&u.scale(lambda));
    check_not_converged(a, &r, tol)?;
    let class = classify_standard(a, lambda, &u, tol)?;
    require_unique(class.class, class.witness_magnitude)?;

    let b = a.shifted(lambda);
    let check = in_range(&b.matmul(basis.matrix()), &u, tol)?;
    let x = Lu::factor(&b, tol)?.solve_vec(&u);
    let cross = span_distance(basis.matrix(), &x);
    let t = ProjectedMatrix::new(a, basis)?;
    let (defective, nullities) = defectiveness(t.matrix(), lambda, tol)?;
    Ok(StagnationReport {
        stagnates: check.in_range,
        predicate_value: check.relative,
        method: StagnationMethod::SpanCriterion,
        defective,
        nullities,
        cross_check_value: cross,
        forms_agree: (cross <= tol.membership_tol) == check.in_range,
        rotated: false,
    })
}

/// Subspace form: stagnates iff `g = W·M⁻¹·Wᴴu ∈ range((A − λI)V)` with
/// `M = Wᴴ(A − λI)⁻¹W`, cross-checked by `(A − λI)⁻¹g ∈ span V`.
///
/// `W` must be orthonormal with `u ∈ span W ⊆ span V`.
pub fn stagnation_predicate_subspace(
    a: &DenseMatrix,
    lambda: C64,
    basis: &SearchBasis,
    w: &DenseMatrix,
    u: &Vector,
    tol: &Tolerance,
) -> Result<StagnationReport, StagnationError> {
    tol.validate()?;
    coefficients(basis, u)?;
    if w.rows() != basis.ambient_dim() {
        return Err(StagnationError::DimensionMismatch {
            expected: basis.ambient_dim(),
            found: w.rows(),
        });
    }
    for j in 0..w.cols() {
        let col = w.column(j);
        let distance = basis.distance(&col);
        if distance > SPAN_TOL * col.norm().max(1.0) {
            return Err(StagnationError::NotInSpan { distance });
        }
    }
    let u = u.normalized().ok_or(StagnationError::ZeroVector)?;
    let r = a.mul_vec(&u).sub(&u.scale(lambda));
    check_not_converged(a, &r, tol)?;
    let class = classify_subspace(a, lambda, w, &u, tol)?;
    require_unique(class.class, class.witness_magnitude)?;

    let b = a.shifted(lambda);
    let lu = Lu::factor(&b, tol)?;
    let m = w.adjoint_mul(&lu.solve(w));
    let c = lu_solve(&m, &DenseMatrix::from_column(&w.adjoint_mul_vec(&u)), tol)
        .map_err(|_| StagnationError::SingularWitness {
            sigma_min: class.witness_magnitude,
        })?
        .column(0);
    let g = w.mul_vec(&c);
    let check = in_range(&b.matmul(basis.matrix()), &g, tol)?;
    let cross = span_distance(basis.matrix(), &lu.solve_vec(&g));
    let t = ProjectedMatrix::new(a, basis)?;
    let (defective, nullities) = defectiveness(t.matrix(), lambda, tol)?;
    Ok(StagnationReport {
        stagnates: check.in_range,
        predicate_value: check.relative,
        method: StagnationMethod::Subspace,
        defective,
        nullities,
        cross_check_value: cross,
        forms_agree: (cross <= tol.membership_tol) == check.in_range,
        rotated: false,
    })
}

/// Two-sided form: with `x = (A − θI)⁻¹q` on the right or
/// `x = (Aᴴ − θ̄I)⁻¹p` on the left, stagnates iff
/// `‖x − Πx‖ ≤ membership_tol · ‖x‖`.
///
/// `Π` is the oblique projector `Q(PᴴQ)⁻¹Pᴴ` (bi right), `P(QᴴP)⁻¹Qᴴ`
/// (bi left), or the orthogonal projector onto `span Q` (orth right) or
/// `span P` (orth left); for bi-orthonormal bases the oblique projectors are
/// `QPᴴ` and `PQᴴ`. The cross-check is the orthogonal distance of `x` from
/// the same space. Defectiveness is tested on `(PᴴQ)⁻¹PᴴAQ` at `θ` for right
/// forms and on `(QᴴP)⁻¹QᴴAᴴP` at `θ̄` for left forms.
#[allow(clippy::too_many_arguments)]
pub fn stagnation_predicate_two_sided(
    a: &DenseMatrix,
    theta: C64,
    q_basis: &DenseMatrix,
    p_basis: &DenseMatrix,
    q: &Vector,
    p: &Vector,
    which: TwoSidedKind,
    tol: &Tolerance,
) -> Result<StagnationReport, StagnationError> {
    tol.validate()?;
    let n = a.rows();
    for m in [q_basis, p_basis] {
        if m.rows() != n {
            return Err(StagnationError::DimensionMismatch {
                expected: n,
                found: m.rows(),
            });
        }
    }
    if q_basis.cols() != p_basis.cols() {
        return Err(StagnationError::DimensionMismatch {
            expected: q_basis.cols(),
            found: p_basis.cols(),
        });
    }
    if q.len() != n || p.len() != n {
        return Err(StagnationError::DimensionMismatch {
            expected: n,
            found: if q.len() != n { q.len() } else { p.len() },
        });
    }
    let q = q.normalized().ok_or(StagnationError::ZeroVector)?;
    let p = p.normalized().ok_or(StagnationError::ZeroVector)?;
    let residual = if which.is_left() {
        a.adjoint_mul_vec(&p).sub(&p.scale(theta.conj()))
    } else {
        a.mul_vec(&q).sub(&q.scale(theta))
    };
    check_not_converged(a, &residual, tol)?;
    let class = classify_two_sided(a, theta, &q, &p, which, tol)?;
    require_unique(class.class, class.witness_magnitude)?;

    // (space, other): x is tested for membership in span(space).
    let (space, other, b, dir, shift) = if which.is_left() {
        (p_basis, q_basis, a.adjoint(), &p, theta.conj())
    } else {
        (q_basis, p_basis, a.clone(), &q, theta)
    };
    let x = Lu::factor(&b.shifted(shift), tol)?.solve_vec(dir);
    let xn = x.norm();
    if xn == 0.0 {
        return Err(StagnationError::ZeroVector);
    }
    let g = other.adjoint_mul(space);
    let px = if which.is_bi() {
        let c = lu_solve(&g, &DenseMatrix::from_column(&other.adjoint_mul_vec(&x)), tol)
            .map_err(|_| StagnationError::BiorthBreakdown)?;
        space.mul_vec(&c.column(0))
    } else {
        let o = orthonormalize(space, tol)?.q;
        o.mul_vec(&o.adjoint_mul_vec(&x))
    };
    let predicate_value = x.sub(&px).norm() / xn;
    let stagnates = predicate_value <= tol.membership_tol;
    let cross = span_distance(&orthonormalize(space, tol)?.q, &x);

    let pencil =
        lu_solve(&g, &other.adjoint_mul(&b.matmul(space)), tol).map_err(|_| StagnationError::BiorthBreakdown)?;
    let (defective, nullities) = defectiveness(&pencil, shift, tol)?;
    Ok(StagnationReport {
        stagnates,
        predicate_value,
        method: StagnationMethod::TwoSided(which),
        defective,
        nullities,
        cross_check_value: cross,
        forms_agree: (cross <= tol.membership_tol) == stagnates,
        rotated: false,
    })
}

/// `¬stagnates ∨ is_defective(T, λ)`.
pub fn check_defectiveness_implication(
    report: &StagnationReport,
    t: &ProjectedMatrix,
    lambda: C64,
    tol: &Tolerance,
) -> bool {
    if !report.stagnates {
        return true;
    }
    matches!(is_defective(t.matrix(), lambda, tol), Ok(d) if d.defective)
}
