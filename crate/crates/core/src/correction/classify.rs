use super::{
    factor_shift, CorrectionError, CorrectionVariant, Solvability, SolvabilityReport, TwoSidedKind, VariantTag, Witness,
};
use crate::linalg::{svd, DenseMatrix, Lu, Tolerance, Vector, C64};

/// Classifies `(I − uuᴴ)(A − λI)(I − uuᴴ)v = −r` through the scalar witness
/// `s = uᴴ(A − λI)⁻¹u`: unique iff `|s| > membership_tol · ‖(A − λI)⁻¹u‖`,
/// otherwise no solution.
pub fn classify_standard(
    a: &DenseMatrix,
    lambda: C64,
    u: &Vector,
    tol: &Tolerance,
) -> Result<SolvabilityReport, CorrectionError> {
    tol.validate()?;
    let CorrectionVariant::Standard { u } = CorrectionVariant::standard(u.clone())? else {
        unreachable!()
    };
    check_dim(a, u.len())?;
    let lu = factor_shift(a, lambda, tol)?;
    Ok(scalar_report(&lu, &u, &u, tol, VariantTag::Standard))
}

/// Classifies the subspace correction equation
/// `(I − WWᴴ)(A − λI)(I − WWᴴ)v = −r` through `M = Wᴴ(A − λI)⁻¹W`:
/// nonsingular `M` gives a unique solution; otherwise `z = Wᴴu` decides
/// between infinitely many (`z ∈ range M`) and none.
pub fn classify_subspace(
    a: &DenseMatrix,
    lambda: C64,
    w: &DenseMatrix,
    u: &Vector,
    tol: &Tolerance,
) -> Result<SolvabilityReport, CorrectionError> {
    tol.validate()?;
    let CorrectionVariant::Subspace { w, u } = CorrectionVariant::subspace(w.clone(), u.clone())? else {
        unreachable!()
    };
    check_dim(a, u.len())?;
    let lu = factor_shift(a, lambda, tol)?;
    let z = w.adjoint_mul_vec(&u);
    Ok(subspace_report(&lu, &w, &z, tol)?.report)
}

/// Classifies one of the two-sided correction equations through its scalar
/// witness: `pᴴ(A − θI)⁻¹q` (bi right), `qᴴ(Aᴴ − θ̄I)⁻¹p` (bi left),
/// `qᴴ(A − θI)⁻¹q` (orth right) or `pᴴ(Aᴴ − θ̄I)⁻¹p` (orth left).
///
/// The test is invariant to the scaling of `q` and `p`, so no bi-orthogonal
/// normalization is applied and `qᴴp = 0` is classified rather than rejected.
pub fn classify_two_sided(
    a: &DenseMatrix,
    theta: C64,
    q: &Vector,
    p: &Vector,
    which: TwoSidedKind,
    tol: &Tolerance,
) -> Result<SolvabilityReport, CorrectionError> {
    tol.validate()?;
    check_dim(a, q.len())?;
    if p.len() != q.len() {
        return Err(CorrectionError::DimensionMismatch {
            expected: q.len(),
            found: p.len(),
        });
    }
    let (Some(q), Some(p)) = (q.normalized(), p.normalized()) else {
        return Err(CorrectionError::BiorthBreakdown { overlap: 0.0 });
    };
    let lu = two_sided_factor(a, theta, which, tol)?;
    let (dir, side, _) = two_sided_roles(which, &q, &p);
    Ok(scalar_report(&lu, dir, side, tol, which.tag()))
}

/// Dispatches on the variant payload.
pub fn classify(
    a: &DenseMatrix,
    lambda: C64,
    variant: &CorrectionVariant,
    tol: &Tolerance,
) -> Result<SolvabilityReport, CorrectionError> {
    match variant {
        CorrectionVariant::Standard { u } => classify_standard(a, lambda, u, tol),
        CorrectionVariant::Subspace { w, u } => classify_subspace(a, lambda, w, u, tol),
        CorrectionVariant::TwoSided { kind, q, p, theta } => classify_two_sided(a, *theta, q, p, *kind, tol),
    }
}

pub(crate) fn check_dim(a: &DenseMatrix, n: usize) -> Result<(), CorrectionError> {
    if a.rows() != n || a.cols() != n {
        return Err(CorrectionError::DimensionMismatch {
            expected: a.rows(),
            found: n,
        });
    }
    Ok(())
}

/// Factors `A − θI` for right forms and `Aᴴ − θ̄I` for left forms.
pub(crate) fn two_sided_factor(
    a: &DenseMatrix,
    theta: C64,
    which: TwoSidedKind,
    tol: &Tolerance,
) -> Result<Lu, CorrectionError> {
    if which.is_left() {
        factor_shift(&a.adjoint(), theta.conj(), tol)
    } else {
        factor_shift(a, theta, tol)
    }
}

/// `(direction, side, rhs_normal)`: the solution has the form
/// `−B⁻¹r + βB⁻¹·direction` with `sideᴴ·solution = 0`, and the right-hand
/// side must be orthogonal to `rhs_normal`.
pub(crate) fn two_sided_roles<'a>(
    which: TwoSidedKind,
    q: &'a Vector,
    p: &'a Vector,
) -> (&'a Vector, &'a Vector, &'a Vector) {
    match which {
        TwoSidedKind::BiRight => (q, p, p),
        TwoSidedKind::OrthRight => (q, q, p),
        TwoSidedKind::BiLeft => (p, q, q),
        TwoSidedKind::OrthLeft => (p, p, q),
    }
}

/// Witness `yᴴB⁻¹x` tested against `membership_tol · ‖B⁻¹x‖ · ‖y‖`.
pub(crate) fn scalar_report(
    lu: &Lu,
    x: &Vector,
    y: &Vector,
    tol: &Tolerance,
    variant: VariantTag,
) -> SolvabilityReport {
    let bx = lu.solve_vec(x);
    let s = y.dot(&bx);
    let scale = bx.norm() * y.norm();
    let threshold = tol.membership_tol * scale;
    let class = if s.norm() > threshold {
        Solvability::Unique
    } else {
        Solvability::NoSolution
    };
    SolvabilityReport {
        variant,
        class,
        witness: Witness::Scalar(s),
        witness_magnitude: s.norm(),
        witness_scale: scale,
        threshold,
        witness_condition: None,
        range_residual: None,
    }
}

pub(crate) struct SubspaceWitness {
    pub report: SolvabilityReport,
    /// `(A − λI)⁻¹W`.
    pub x: DenseMatrix,
    /// `WᴴX`.
    pub m: DenseMatrix,
}

pub(crate) fn subspace_report(
    lu: &Lu,
    w: &DenseMatrix,
    z: &Vector,
    tol: &Tolerance,
) -> Result<SubspaceWitness, CorrectionError> {
    let x = lu.solve(w);
    let m = w.adjoint_mul(&x);
    let scale = svd(&x)?.sigma_max();
    let d = svd(&m)?;
    let threshold = tol.membership_tol * scale;
    let smin = d.sigma_min();
    let (class, witness_condition, range_residual) = if smin > threshold {
        (Solvability::Unique, Some(d.sigma_max() / smin), None)
    } else {
        let rank = d.rank(threshold);
        let zn = z.norm();
        let rel = if zn == 0.0 { 0.0 } else { d.range_residual(z, rank) / zn };
        let class = if rel <= tol.membership_tol {
            Solvability::Infinite
        } else {
            Solvability::NoSolution
        };
        (class, None, Some(rel))
    };
    Ok(SubspaceWitness {
        report: SolvabilityReport {
            variant: VariantTag::Subspace,
            class,
            witness: Witness::Matrix(m.clone()),
            witness_magnitude: smin,
            witness_scale: scale,
            threshold,
            witness_condition,
            range_residual,
        },
        x,
        m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::ONE;

    #[test]
    fn first_example_has_no_solution() {
        let ex = fixtures::example1();
        let r = classify_standard(&ex.a, ONE, &Vector::unit(3, 0), &Tolerance::default()).unwrap();
        assert_eq!(r.class, Solvability::NoSolution);
        assert!(r.witness_magnitude <= 1e-14);
    }

    #[test]
    fn second_example_is_unique() {
        let ex = fixtures::example2();
        let r = classify_standard(&ex.a, ONE, &Vector::unit(4, 0), &Tolerance::default()).unwrap();
        assert_eq!(r.class, Solvability::Unique);
    }

    #[test]
    fn diagonal_witness() {
        let a = DenseMatrix::from_real_diag(&[1.0, 2.0, 3.0]);
        let r = classify_standard(&a, C64::new(1.5, 0.0), &Vector::unit(3, 0), &Tolerance::default()).unwrap();
        assert_eq!(r.witness, Witness::Scalar(C64::new(-2.0, 0.0)));
        assert_eq!(r.class, Solvability::Unique);
    }

    #[test]
    fn single_column_subspace_reduces_to_standard() {
        let ex = fixtures::example1();
        let u = Vector::unit(3, 0);
        let tol = Tolerance::default();
        let s = classify_standard(&ex.a, ONE, &u, &tol).unwrap();
        let m = classify_subspace(&ex.a, ONE, &DenseMatrix::from_column(&u), &u, &tol).unwrap();
        assert_eq!(s.class, m.class);
        assert_eq!(s.witness_scale, m.witness_scale);
        let Witness::Matrix(mm) = &m.witness else { panic!() };
        assert_eq!(Witness::Scalar(mm[(0, 0)]), s.witness);
    }

    #[test]
    fn diagonal_subspace_is_unique() {
        let a = DenseMatrix::from_real_diag(&[1.0, 2.0, 3.0, 4.0]);
        let w = DenseMatrix::from_columns(&[Vector::unit(4, 0), Vector::unit(4, 1)]);
        let r = classify_subspace(&a, C64::new(2.5, 0.0), &w, &Vector::unit(4, 0), &Tolerance::default()).unwrap();
        assert_eq!(r.class, Solvability::Unique);
        let Witness::Matrix(m) = r.witness else { panic!() };
        assert!((m[(0, 0)] - C64::new(-1.0 / 1.5, 0.0)).norm() < 1e-15);
        assert!((m[(1, 1)] - C64::new(-2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn orthogonal_two_sided_structure_forces_zero() {
        let a = DenseMatrix::from_real_diag(&[1.0, 2.0]);
        let theta = C64::new(1.5, 0.0);
        let (q, p) = (Vector::unit(2, 0), Vector::unit(2, 1));
        let tol = Tolerance::default();
        let r = classify_two_sided(&a, theta, &q, &p, TwoSidedKind::BiRight, &tol).unwrap();
        assert_eq!(r.class, Solvability::NoSolution);
        assert_eq!(r.witness_magnitude, 0.0);
        let r = classify_two_sided(&a, theta, &q, &p, TwoSidedKind::OrthRight, &tol).unwrap();
        assert_eq!(r.witness, Witness::Scalar(C64::new(-2.0, 0.0)));
    }

    #[test]
    fn hermitian_two_sided_collapses_to_standard() {
        let mut rng = fixtures::seeded_rng(11);
        let a = fixtures::random_hermitian(&mut rng, 5);
        let u = fixtures::random_vector(&mut rng, 5).normalized().unwrap();
        let lambda = C64::new(0.25, 0.0);
        let tol = Tolerance::default();
        let s = classify_standard(&a, lambda, &u, &tol).unwrap();
        for kind in [
            TwoSidedKind::BiRight,
            TwoSidedKind::BiLeft,
            TwoSidedKind::OrthRight,
            TwoSidedKind::OrthLeft,
        ] {
            let t = classify_two_sided(&a, lambda, &u, &u, kind, &tol).unwrap();
            let (Witness::Scalar(x), Witness::Scalar(y)) = (&s.witness, &t.witness) else {
                panic!()
            };
            assert!((x - y).norm() < 1e-12 * x.norm());
        }
    }

    #[test]
    fn singular_shift_is_reported() {
        let a = DenseMatrix::from_real_diag(&[1.0, 2.0]);
        let err = classify_standard(&a, ONE, &Vector::unit(2, 0), &Tolerance::default()).unwrap_err();
        assert!(matches!(err, CorrectionError::SingularShift { .. }));
    }
}
