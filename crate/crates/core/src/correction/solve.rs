use serde::{Deserialize, Serialize};

use super::classify::{check_dim, scalar_report, subspace_report};
use super::{
    backward_error, factor_shift, path_tolerance, CorrectionError, CorrectionSolution, CorrectionVariant, Solvability,
    VariantTag,
};
use crate::linalg::{lu_solve, lu_solve_vec, orthonormal_complement, svd, DenseMatrix, Tolerance, Vector, C64};

/// Largest component of the right-hand side along a direction it must be
/// orthogonal to, relative to `‖A − λI‖_F + ‖r‖`.
pub(crate) const RHS_COMPONENT_TOL: f64 = 1e-8;

/// How [`solve_subspace`] treats an equation with infinitely many solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubspaceMode {
    /// Only a unique solution is accepted.
    Strict,
    /// The minimum-norm solution is returned when solutions are not unique.
    MinNorm,
}

/// Solves `(I − uuᴴ)(A − λI)(I − uuᴴ)v = −r` with `v ⊥ u`.
///
/// The complement path solves `[U⊥ᴴ(A − λI)U⊥]w = −U⊥ᴴr`, `v = U⊥w`; the
/// closed form is `v = −(A − λI)⁻¹r + α(A − λI)⁻¹u` with
/// `α = uᴴ(A − λI)⁻¹r / uᴴ(A − λI)⁻¹u`. The complement solution is returned
/// once both agree.
pub fn solve_standard(
    a: &DenseMatrix,
    lambda: C64,
    u: &Vector,
    r: &Vector,
    tol: &Tolerance,
) -> Result<CorrectionSolution, CorrectionError> {
    tol.validate()?;
    let CorrectionVariant::Standard { u } = CorrectionVariant::standard(u.clone())? else {
        unreachable!()
    };
    check_dim(a, u.len())?;
    check_dim(a, r.len())?;
    let lu = factor_shift(a, lambda, tol)?;
    let report = scalar_report(&lu, &u, &u, tol, VariantTag::Standard);
    if report.class != Solvability::Unique {
        return Err(CorrectionError::Inconsistent {
            witness: report.witness_magnitude,
        });
    }
    let b = a.shifted(lambda);
    let bnorm = b.norm_fro();
    let r = project_out(r, &DenseMatrix::from_column(&u), bnorm)?;

    let xu = lu.solve_vec(&u);
    let xr = lu.solve_vec(&r);
    let alpha = u.dot(&xr) / u.dot(&xu);
    let closed = xr.neg().add(&xu.scale(alpha));

    let uc = orthonormal_complement(&DenseMatrix::from_column(&u))?;
    let v = complement_solve(&b, &uc, &r, tol)?;
    let path_deviation = relative_gap(&closed, &v);
    let growth = (xu.norm()).max(if r.norm() > 0.0 { xr.norm() / r.norm() } else { 0.0 });
    if path_deviation > path_tolerance(bnorm, growth) {
        return Err(CorrectionError::PathMismatch {
            deviation: path_deviation,
        });
    }

    let w = DenseMatrix::from_column(&u);
    let lhs = apply_projected(&b, &w, &v);
    let vn = v.norm();
    Ok(CorrectionSolution {
        equation_residual: backward_error(&lhs, &r.neg(), bnorm, vn),
        side_orthogonality: if vn == 0.0 { 0.0 } else { u.dot(&v).norm() / vn },
        v,
        report,
        path_deviation,
    })
}

/// Solves `(I − WWᴴ)(A − λI)(I − WWᴴ)v = −r` with `v ⊥ span W`.
///
/// A unique solution is computed on the complement of `W` and cross-checked
/// against `v = −(A − λI)⁻¹r + (A − λI)⁻¹W·M⁻¹·Wᴴ(A − λI)⁻¹r`. In
/// [`SubspaceMode::MinNorm`] a non-unique system returns the minimum-norm
/// solution of the complement system.
pub fn solve_subspace(
    a: &DenseMatrix,
    lambda: C64,
    w: &DenseMatrix,
    r: &Vector,
    tol: &Tolerance,
    mode: SubspaceMode,
) -> Result<CorrectionSolution, CorrectionError> {
    tol.validate()?;
    check_dim(a, w.rows())?;
    check_dim(a, r.len())?;
    let defect = w.orthonormality_defect();
    if defect > 1e-10 || w.cols() > w.rows() {
        return Err(CorrectionError::InvalidPayload(format!(
            "W is not orthonormal (defect {defect:.3e})"
        )));
    }
    let n = a.rows();
    let lu = factor_shift(a, lambda, tol)?;
    let b = a.shifted(lambda);
    let bnorm = b.norm_fro();
    let r = project_out(r, w, bnorm)?;
    let xr = lu.solve_vec(&r);
    let z = w.adjoint_mul_vec(&xr);
    let sw = subspace_report(&lu, w, &z, tol)?;
    let report = sw.report.clone();
    match (report.class, mode) {
        (Solvability::NoSolution, _) => {
            return Err(CorrectionError::Inconsistent {
                witness: report.witness_magnitude,
            })
        }
        (Solvability::Infinite, SubspaceMode::Strict) => return Err(CorrectionError::NotUnique),
        _ => {}
    }

    let (v, path_deviation) = if w.cols() == n {
        (Vector::zeros(n), 0.0)
    } else {
        let wc = orthonormal_complement(w)?;
        if report.class == Solvability::Unique {
            let v = complement_solve(&b, &wc, &r, tol)?;
            let c = lu_solve_vec(&sw.m, &z, tol)?;
            let closed = xr.neg().add(&sw.x.mul_vec(&c));
            let gap = relative_gap(&closed, &v);
            (v, gap)
        } else {
            let c = wc.adjoint_mul(&b.matmul(&wc));
            let rhs = wc.adjoint_mul_vec(&r).neg();
            let d = svd(&c)?;
            let y = d.solve_min_norm(&rhs, tol.membership_tol * d.sigma_max());
            (wc.mul_vec(&y), 0.0)
        }
    };
    let growth = report
        .witness_scale
        .max(if r.norm() > 0.0 { xr.norm() / r.norm() } else { 0.0 });
    if path_deviation > path_tolerance(bnorm, growth) {
        return Err(CorrectionError::PathMismatch {
            deviation: path_deviation,
        });
    }
    let lhs = apply_projected(&b, w, &v);
    let vn = v.norm();
    Ok(CorrectionSolution {
        equation_residual: backward_error(&lhs, &r.neg(), bnorm, vn),
        side_orthogonality: if vn == 0.0 {
            0.0
        } else {
            w.adjoint_mul_vec(&v).norm() / vn
        },
        v,
        report,
        path_deviation,
    })
}

/// Removes the component of `r` in `span W`, rejecting components larger
/// than rounding explains.
pub(crate) fn project_out(r: &Vector, w: &DenseMatrix, op_norm: f64) -> Result<Vector, CorrectionError> {
    let c = w.adjoint_mul_vec(r);
    let component = c.norm();
    if component > RHS_COMPONENT_TOL * (op_norm + r.norm()) {
        return Err(CorrectionError::RhsNotOrthogonal { component });
    }
    Ok(r.sub(&w.mul_vec(&c)))
}

/// Solves the projected equation for `v ⊥ span W` on the complement of `W`
/// alone. Unlike [`solve_subspace`] this does not factor `A − λI`, so it
/// stays usable when the shift is numerically an eigenvalue.
pub(crate) fn solve_on_complement(
    a: &DenseMatrix,
    lambda: C64,
    w: &DenseMatrix,
    r: &Vector,
    tol: &Tolerance,
) -> Result<Vector, CorrectionError> {
    check_dim(a, w.rows())?;
    check_dim(a, r.len())?;
    let b = a.shifted(lambda);
    let r = project_out(r, w, b.norm_fro())?;
    if w.cols() >= a.rows() {
        return Ok(Vector::zeros(a.rows()));
    }
    let wc = orthonormal_complement(w)?;
    complement_solve(&b, &wc, &r, tol)
}

/// `v = U⊥·[U⊥ᴴBU⊥]⁻¹(−U⊥ᴴr)`.
fn complement_solve(b: &DenseMatrix, uc: &DenseMatrix, r: &Vector, tol: &Tolerance) -> Result<Vector, CorrectionError> {
    let c = uc.adjoint_mul(&b.matmul(uc));
    let rhs = DenseMatrix::from_column(&uc.adjoint_mul_vec(r).neg());
    let w = lu_solve(&c, &rhs, tol)?;
    Ok(uc.mul_vec(&w.column(0)))
}

/// `(I − WWᴴ)B(I − WWᴴ)v`.
pub(crate) fn apply_projected(b: &DenseMatrix, w: &DenseMatrix, v: &Vector) -> Vector {
    let proj = |x: &Vector| x.sub(&w.mul_vec(&w.adjoint_mul_vec(x)));
    proj(&b.mul_vec(&proj(v)))
}

/// `‖x − y‖ / max(‖x‖, ‖y‖)`, or 0 when both vanish.
pub(crate) fn relative_gap(x: &Vector, y: &Vector) -> f64 {
    let scale = x.norm().max(y.norm());
    if scale == 0.0 {
        0.0
    } else {
        x.sub(y).norm() / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::ONE;

    fn close(v: &Vector, expected: &[f64], tol: f64) -> bool {
        v.iter()
            .zip(expected)
            .all(|(x, &y)| (x - C64::new(y, 0.0)).norm() <= tol)
    }

    #[test]
    fn second_example_correction() {
        let ex = fixtures::example2();
        let sol = solve_standard(
            &ex.a,
            ONE,
            &Vector::unit(4, 0),
            &Vector::unit(4, 3),
            &Tolerance::default(),
        )
        .unwrap();
        assert!(close(&sol.v, &[0.0, -3.0, 0.0, 0.0], 1e-12), "{:?}", sol.v);
        assert!(sol.path_deviation < 1e-10);
    }

    #[test]
    fn third_example_correction() {
        let ex = fixtures::example3();
        let r = Vector::from_real(&[0.0, 0.0, 1.0, 3.0]).unwrap();
        let sol = solve_standard(&ex.a, ONE, &Vector::unit(4, 0), &r, &Tolerance::default()).unwrap();
        assert!(close(&sol.v, &[0.0, -4.0 / 7.0, -3.0 / 7.0, 1.0 / 7.0], 1e-12));
        assert!(sol.path_deviation < 1e-10);
        assert!(sol.equation_residual < 1e-14);
    }

    #[test]
    fn first_example_is_inconsistent() {
        let ex = fixtures::example1();
        let err = solve_standard(
            &ex.a,
            ONE,
            &Vector::unit(3, 0),
            &Vector::unit(3, 1),
            &Tolerance::default(),
        )
        .unwrap_err();
        assert!(matches!(err, CorrectionError::Inconsistent { .. }));
    }

    #[test]
    fn diagonal_two_paths_agree() {
        let a = DenseMatrix::from_real_diag(&[1.0, 2.0, 3.0]);
        let s = 0.5f64.sqrt();
        let u = Vector::from_real(&[s, s, 0.0]).unwrap();
        let lambda = C64::new(1.25, 0.0);
        let au = a.mul_vec(&u);
        let r = au.sub(&u.scale(u.dot(&au)));
        let sol = solve_standard(&a, lambda, &u, &r, &Tolerance::default()).unwrap();
        assert!(sol.path_deviation < 1e-12);
        assert!(sol.equation_residual < 1e-14);
        assert!(sol.side_orthogonality < 1e-14);
    }

    #[test]
    fn single_column_subspace_matches_standard() {
        let ex = fixtures::example3();
        let r = Vector::from_real(&[0.0, 0.0, 1.0, 3.0]).unwrap();
        let u = Vector::unit(4, 0);
        let tol = Tolerance::default();
        let s = solve_standard(&ex.a, ONE, &u, &r, &tol).unwrap();
        let m = solve_subspace(
            &ex.a,
            ONE,
            &DenseMatrix::from_column(&u),
            &r,
            &tol,
            SubspaceMode::Strict,
        )
        .unwrap();
        assert!(s.v.sub(&m.v).norm() < 1e-14);
    }

    #[test]
    fn full_subspace_on_second_example_leaves_span() {
        let ex = fixtures::example2();
        let sol = solve_subspace(
            &ex.a,
            ONE,
            &ex.basis,
            &Vector::unit(4, 3),
            &Tolerance::default(),
            SubspaceMode::Strict,
        )
        .unwrap();
        assert!(sol.side_orthogonality < 1e-14);
        assert!(sol.v.norm() > 0.1);
        assert!(sol.equation_residual < 1e-14);
    }

    #[test]
    fn underdetermined_instance() {
        let mut rng = fixtures::seeded_rng(5);
        let inst = fixtures::constructed_instance(&mut rng, 6, 3, 2, fixtures::InstanceKind::Underdetermined);
        let tol = Tolerance::default();
        let strict = solve_subspace(
            &inst.a,
            inst.ritz_value,
            &inst.subspace,
            &inst.residual,
            &tol,
            SubspaceMode::Strict,
        );
        assert_eq!(strict.unwrap_err(), CorrectionError::NotUnique);
        let sol = solve_subspace(
            &inst.a,
            inst.ritz_value,
            &inst.subspace,
            &inst.residual,
            &tol,
            SubspaceMode::MinNorm,
        )
        .unwrap();
        assert_eq!(sol.report.class, Solvability::Infinite);
        assert!(sol.equation_residual < 1e-10);
        assert!(sol.side_orthogonality < 1e-12);
    }

    #[test]
    fn rhs_must_be_orthogonal() {
        let a = DenseMatrix::from_real_diag(&[1.0, 2.0, 3.0]);
        let err = solve_standard(
            &a,
            C64::new(1.5, 0.0),
            &Vector::unit(3, 0),
            &Vector::ones(3),
            &Tolerance::default(),
        )
        .unwrap_err();
        assert!(matches!(err, CorrectionError::RhsNotOrthogonal { .. }));
    }

    #[test]
    fn complement_solve_survives_exact_eigenvalue_shift() {
        let a = DenseMatrix::from_real_diag(&[1.0, 2.0, 4.0]);
        let u = Vector::unit(3, 0);
        let r = Vector::from_real(&[0.0, 1.0, 1.0]).unwrap();
        let tol = Tolerance::default();
        let err = solve_standard(&a, ONE, &u, &r, &tol).unwrap_err();
        assert!(matches!(err, CorrectionError::SingularShift { .. }));
        let v = solve_on_complement(&a, ONE, &DenseMatrix::from_column(&u), &r, &tol).unwrap();
        assert!(close(&v, &[0.0, -1.0, -1.0 / 3.0], 1e-15));
    }
}
