//! Correction equations: variant payloads, solvability classification,
//! solvers and the complement-system oracle.

mod classify;
mod oracle;
mod precond;
mod solve;
mod two_sided;

pub use classify::{classify, classify_standard, classify_subspace, classify_two_sided};
pub use oracle::{classify_feng_jia_oracle, FengJiaClass, FengJiaReport};
pub use precond::{apply_projected_preconditioner, PreconditionedSolution};
pub(crate) use solve::solve_on_complement;
pub use solve::{solve_standard, solve_subspace, SubspaceMode};
pub use two_sided::solve_two_sided;
pub(crate) use two_sided::solve_two_sided_on_complement;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{DenseMatrix, LinalgError, Lu, Tolerance, Vector, C64};

/// Relative tolerance on unit-norm and bi-orthonormality payload checks.
const PAYLOAD_TOL: f64 = 1e-10;
/// `|qᴴp| ≤ BREAKDOWN·‖q‖‖p‖` counts as a bi-orthogonal breakdown.
pub const BREAKDOWN: f64 = 1e-12;
/// Two solution paths that disagree by more than this relative amount raise
/// [`CorrectionError::PathMismatch`], unless the shifted operator is so
/// ill-conditioned that the closed form cannot be trusted to this level.
pub const PATH_MISMATCH: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorrectionError {
    #[error(transparent)]
    Linalg(LinalgError),
    #[error("shift {shift} is numerically an eigenvalue of A (pivot {pivot:.3e} at column {column})")]
    SingularShift { shift: C64, column: usize, pivot: f64 },
    #[error("the correction equation has no solution (witness magnitude {witness:.3e})")]
    Inconsistent { witness: f64 },
    #[error("the correction equation has infinitely many solutions")]
    NotUnique,
    #[error("solution paths disagree (relative deviation {deviation:.3e})")]
    PathMismatch { deviation: f64 },
    #[error("invalid correction payload: {0}")]
    InvalidPayload(String),
    #[error("bi-orthogonality breakdown: |qᴴp| = {overlap:.3e}")]
    BiorthBreakdown { overlap: f64 },
    #[error("right-hand side is not orthogonal to the required direction (component {component:.3e})")]
    RhsNotOrthogonal { component: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

impl From<LinalgError> for CorrectionError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::DimensionMismatch { expected, found } => Self::DimensionMismatch { expected, found },
            other => Self::Linalg(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VariantTag {
    Standard,
    Subspace,
    TwoSidedBiRight,
    TwoSidedBiLeft,
    TwoSidedOrthRight,
    TwoSidedOrthLeft,
}

/// Which of the four two-sided correction equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TwoSidedKind {
    /// `(I − qpᴴ)(A − θI)(I − qpᴴ)s = −r_q`, `s ⊥ p`.
    BiRight,
    /// `(I − pqᴴ)(Aᴴ − θ̄I)(I − pqᴴ)t = −r_p`, `t ⊥ q`.
    BiLeft,
    /// `(I − qpᴴ/pᴴq)(A − θI)(I − qqᴴ)s = −r_q`, `s ⊥ q`.
    OrthRight,
    /// `(I − pqᴴ/qᴴp)(Aᴴ − θ̄I)(I − ppᴴ)t = −r_p`, `t ⊥ p`.
    OrthLeft,
}

impl TwoSidedKind {
    pub fn tag(self) -> VariantTag {
        match self {
            Self::BiRight => VariantTag::TwoSidedBiRight,
            Self::BiLeft => VariantTag::TwoSidedBiLeft,
            Self::OrthRight => VariantTag::TwoSidedOrthRight,
            Self::OrthLeft => VariantTag::TwoSidedOrthLeft,
        }
    }

    pub fn is_left(self) -> bool {
        matches!(self, Self::BiLeft | Self::OrthLeft)
    }

    pub fn is_bi(self) -> bool {
        matches!(self, Self::BiRight | Self::BiLeft)
    }
}

/// A correction equation together with the projector data it needs.
#[derive(Debug, Clone, PartialEq)]
pub enum CorrectionVariant {
    Standard {
        u: Vector,
    },
    Subspace {
        w: DenseMatrix,
        u: Vector,
    },
    TwoSided {
        kind: TwoSidedKind,
        q: Vector,
        p: Vector,
        theta: C64,
    },
}

impl CorrectionVariant {
    /// Requires `‖u‖ = 1`.
    pub fn standard(u: Vector) -> Result<Self, CorrectionError> {
        check_unit(&u, "u")?;
        Ok(Self::Standard { u })
    }

    /// Requires `WᴴW = I`, `‖u‖ = 1` and `u ∈ span W`.
    pub fn subspace(w: DenseMatrix, u: Vector) -> Result<Self, CorrectionError> {
        check_unit(&u, "u")?;
        if w.rows() != u.len() {
            return Err(CorrectionError::DimensionMismatch {
                expected: u.len(),
                found: w.rows(),
            });
        }
        let defect = w.orthonormality_defect();
        if defect > PAYLOAD_TOL {
            return Err(CorrectionError::InvalidPayload(format!(
                "W is not orthonormal (defect {defect:.3e})"
            )));
        }
        let dist = u.sub(&w.mul_vec(&w.adjoint_mul_vec(&u))).norm();
        if dist > PAYLOAD_TOL {
            return Err(CorrectionError::InvalidPayload(format!(
                "u is not in span W (distance {dist:.3e})"
            )));
        }
        Ok(Self::Subspace { w, u })
    }

    /// Bi forms rescale `p` so that `qᴴp = 1`; orth forms normalize both
    /// vectors. Rejects `|qᴴp| < 10⁻¹²·‖q‖‖p‖` as breakdown.
    pub fn two_sided(kind: TwoSidedKind, q: Vector, p: Vector, theta: C64) -> Result<Self, CorrectionError> {
        if q.len() != p.len() {
            return Err(CorrectionError::DimensionMismatch {
                expected: q.len(),
                found: p.len(),
            });
        }
        let (q, p) = normalize_pair(kind, &q, &p)?;
        Ok(Self::TwoSided { kind, q, p, theta })
    }

    pub fn tag(&self) -> VariantTag {
        match self {
            Self::Standard { .. } => VariantTag::Standard,
            Self::Subspace { .. } => VariantTag::Subspace,
            Self::TwoSided { kind, .. } => kind.tag(),
        }
    }
}

fn check_unit(u: &Vector, name: &str) -> Result<(), CorrectionError> {
    let n = u.norm();
    if (n - 1.0).abs() > PAYLOAD_TOL {
        return Err(CorrectionError::InvalidPayload(format!("‖{name}‖ = {n} is not 1")));
    }
    Ok(())
}

/// Normalizes a two-sided pair according to the variant's convention.
pub(crate) fn normalize_pair(kind: TwoSidedKind, q: &Vector, p: &Vector) -> Result<(Vector, Vector), CorrectionError> {
    let (qn, pn) = (q.norm(), p.norm());
    if qn == 0.0 || pn == 0.0 {
        return Err(CorrectionError::BiorthBreakdown { overlap: 0.0 });
    }
    let overlap = q.dot(p);
    if overlap.norm() < BREAKDOWN * qn * pn {
        return Err(CorrectionError::BiorthBreakdown {
            overlap: overlap.norm() / (qn * pn),
        });
    }
    let q = q.scale_real(1.0 / qn);
    let p = p.scale_real(1.0 / pn);
    if kind.is_bi() {
        let c = q.dot(&p);
        Ok((q, p.scale(C64::new(1.0, 0.0) / c)))
    } else {
        Ok((q, p))
    }
}

/// Solvability class of a correction equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Solvability {
    Unique,
    #[serde(rename = "None")]
    NoSolution,
    Infinite,
}

impl std::fmt::Display for Solvability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Unique => "Unique",
            Self::NoSolution => "None",
            Self::Infinite => "Infinite",
        })
    }
}

/// Quantity whose vanishing or singularity decides solvability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Witness {
    Scalar(C64),
    Matrix(DenseMatrix),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolvabilityReport {
    pub variant: VariantTag,
    pub class: Solvability,
    pub witness: Witness,
    /// `|s|` for a scalar witness, `σ_min(M)` for a matrix witness.
    pub witness_magnitude: f64,
    /// Natural size the magnitude is compared against: `‖(A − λI)⁻¹x‖·‖y‖`
    /// for a scalar witness `yᴴ(A − λI)⁻¹x`, `‖(A − λI)⁻¹W‖₂` for a matrix.
    pub witness_scale: f64,
    /// `witness_magnitude ≤ threshold` declares the witness zero or singular.
    pub threshold: f64,
    /// `σ_max(M)/σ_min(M)` for a matrix witness.
    pub witness_condition: Option<f64>,
    /// Relative least-squares residual of `z ∈ range(M)` when `M` is singular.
    pub range_residual: Option<f64>,
}

impl SolvabilityReport {
    pub fn is_unique(&self) -> bool {
        self.class == Solvability::Unique
    }
}

/// Allowed path deviation for an operator of norm `op_norm` whose inverse
/// amplifies the solved vectors by up to `growth`: the closed form loses
/// roughly `ε·κ` digits, so the bound never drops below that.
pub(crate) fn path_tolerance(op_norm: f64, growth: f64) -> f64 {
    PATH_MISMATCH.max(1e3 * f64::EPSILON * op_norm * growth)
}

/// Factorization of `A − λI`, mapping singular pivots to `SingularShift`.
pub(crate) fn factor_shift(a: &DenseMatrix, shift: C64, tol: &Tolerance) -> Result<Lu, CorrectionError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        }
        .into());
    }
    Lu::factor(&a.shifted(shift), tol).map_err(|e| match e {
        LinalgError::SingularMatrix { column, pivot } => CorrectionError::SingularShift { shift, column, pivot },
        other => other.into(),
    })
}

/// Normwise backward error `‖Lx − b‖ / (‖L‖_F‖x‖ + ‖b‖)` of a computed
/// solution, with `lx = Lx` already formed.
pub(crate) fn backward_error(lx: &Vector, b: &Vector, op_norm: f64, x_norm: f64) -> f64 {
    let denom = op_norm * x_norm + b.norm();
    if denom == 0.0 {
        0.0
    } else {
        lx.sub(b).norm() / denom
    }
}

/// A solved correction equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionSolution {
    pub v: Vector,
    pub report: SolvabilityReport,
    /// Relative deviation between the closed-form and complement paths.
    pub path_deviation: f64,
    /// Backward error of `v` in the projected equation.
    pub equation_residual: f64,
    /// Magnitude of the side-condition inner product, relative to `‖v‖`.
    pub side_orthogonality: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bi_pair_is_normalized_to_unit_overlap() {
        let q = Vector::from_real(&[1.0, 1.0, 0.0]).unwrap();
        let p = Vector::from(vec![C64::new(1.0, 1.0), C64::new(0.0, 0.0), C64::new(2.0, 0.0)]);
        let v = CorrectionVariant::two_sided(TwoSidedKind::BiRight, q, p, C64::new(0.0, 0.0)).unwrap();
        let CorrectionVariant::TwoSided { q, p, .. } = v else {
            unreachable!()
        };
        assert!((q.dot(&p) - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((q.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_pair_breaks_down() {
        let err = CorrectionVariant::two_sided(
            TwoSidedKind::BiLeft,
            Vector::unit(2, 0),
            Vector::unit(2, 1),
            C64::new(0.0, 0.0),
        )
        .unwrap_err();
        assert!(matches!(err, CorrectionError::BiorthBreakdown { .. }));
    }

    #[test]
    fn subspace_payload_requires_membership() {
        let w = DenseMatrix::from_column(&Vector::unit(3, 0));
        assert!(CorrectionVariant::subspace(w.clone(), Vector::unit(3, 0)).is_ok());
        assert!(CorrectionVariant::subspace(w, Vector::unit(3, 1)).is_err());
    }

    #[test]
    fn no_solution_serializes_as_none() {
        assert_eq!(serde_json::to_string(&Solvability::NoSolution).unwrap(), "\"None\"");
    }
}
