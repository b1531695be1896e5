use super::classify::{check_dim, scalar_report, two_sided_factor, two_sided_roles};
use super::solve::{relative_gap, RHS_COMPONENT_TOL};
use super::{
    backward_error, normalize_pair, path_tolerance, CorrectionError, CorrectionSolution, Solvability, TwoSidedKind,
};
use crate::linalg::{lu_solve, orthonormal_complement, DenseMatrix, Tolerance, Vector, C64};

/// Solves one of the four two-sided correction equations.
///
/// Right forms return `s` for `B = A − θI` and `r = r_q`; left forms return
/// `t` for `B = Aᴴ − θ̄I` and `r = r_p`. The closed form
/// `−B⁻¹r + βB⁻¹d` (with `d = q` on the right, `p` on the left, and `β` fixed
/// by the side condition) is cross-checked against a solve on the
/// orthogonal complements of the side vector and of the right-hand-side normal.
pub fn solve_two_sided(
    a: &DenseMatrix,
    theta: C64,
    q: &Vector,
    p: &Vector,
    which: TwoSidedKind,
    r: &Vector,
    tol: &Tolerance,
) -> Result<CorrectionSolution, CorrectionError> {
    tol.validate()?;
    check_dim(a, q.len())?;
    check_dim(a, p.len())?;
    check_dim(a, r.len())?;
    let (q, p) = normalize_pair(which, q, p)?;
    let lu = two_sided_factor(a, theta, which, tol)?;
    let (dir, side, normal) = two_sided_roles(which, &q, &p);
    let report = scalar_report(&lu, dir, side, tol, which.tag());
    if report.class != Solvability::Unique {
        return Err(CorrectionError::Inconsistent {
            witness: report.witness_magnitude,
        });
    }
    let b = if which.is_left() {
        a.adjoint().shifted(theta.conj())
    } else {
        a.shifted(theta)
    };
    let bnorm = b.norm_fro();

    let left = |x: &Vector| project_left(dir, normal, x);
    let r = rhs_on_range(dir, normal, r, bnorm)?;

    let xr = lu.solve_vec(&r);
    let xd = lu.solve_vec(dir);
    let beta = side.dot(&xr) / side.dot(&xd);
    let closed = xr.neg().add(&xd.scale(beta));

    let v = complement_path(&b, dir, side, normal, &r, tol)?;

    let path_deviation = relative_gap(&closed, &v);
    let growth = (xd.norm() / dir.norm()).max(if r.norm() > 0.0 { xr.norm() / r.norm() } else { 0.0 });
    if path_deviation > path_tolerance(bnorm, growth) {
        return Err(CorrectionError::PathMismatch {
            deviation: path_deviation,
        });
    }

    // Right projector: oblique for bi forms, orthogonal for orth forms.
    let right = |x: &Vector| {
        if which.is_bi() {
            left(x)
        } else {
            x.sub(&side.scale(side.dot(x) / side.dot(side)))
        }
    };
    let lhs = left(&b.mul_vec(&right(&v)));
    let vn = v.norm();
    Ok(CorrectionSolution {
        equation_residual: backward_error(&lhs, &r.neg(), bnorm, vn),
        side_orthogonality: if vn == 0.0 {
            0.0
        } else {
            side.dot(&v).norm() / (side.norm() * vn)
        },
        v,
        report,
        path_deviation,
    })
}

/// Complement-path solve of a two-sided equation without factoring the
/// shifted matrix; the fallback when the shift is numerically an eigenvalue.
pub(crate) fn solve_two_sided_on_complement(
    a: &DenseMatrix,
    theta: C64,
    q: &Vector,
    p: &Vector,
    which: TwoSidedKind,
    r: &Vector,
    tol: &Tolerance,
) -> Result<Vector, CorrectionError> {
    check_dim(a, q.len())?;
    check_dim(a, p.len())?;
    check_dim(a, r.len())?;
    let (q, p) = normalize_pair(which, q, p)?;
    let (dir, side, normal) = two_sided_roles(which, &q, &p);
    let b = if which.is_left() {
        a.adjoint().shifted(theta.conj())
    } else {
        a.shifted(theta)
    };
    let r = rhs_on_range(dir, normal, r, b.norm_fro())?;
    complement_path(&b, dir, side, normal, &r, tol)
}

/// `L = I − dir·normalᴴ/(normalᴴdir)`, whose range is `normal⊥`.
fn project_left(dir: &Vector, normal: &Vector, x: &Vector) -> Vector {
    x.sub(&dir.scale(normal.dot(x) / normal.dot(dir)))
}

fn rhs_on_range(dir: &Vector, normal: &Vector, r: &Vector, bnorm: f64) -> Result<Vector, CorrectionError> {
    let component = normal.dot(r).norm() / normal.norm();
    if component > RHS_COMPONENT_TOL * (bnorm + r.norm()) {
        return Err(CorrectionError::RhsNotOrthogonal { component });
    }
    Ok(project_left(dir, normal, r))
}

/// `x = S⊥y` with `S⊥ ⊥ side`, rows restricted by `N⊥ ⊥ normal`.
fn complement_path(
    b: &DenseMatrix,
    dir: &Vector,
    side: &Vector,
    normal: &Vector,
    r: &Vector,
    tol: &Tolerance,
) -> Result<Vector, CorrectionError> {
    let s_perp = orthonormal_complement(&DenseMatrix::from_column(&side.normalized().expect("unit side")))?;
    let n_perp = orthonormal_complement(&DenseMatrix::from_column(&normal.normalized().expect("unit normal")))?;
    let mut lbs = b.matmul(&s_perp);
    for j in 0..lbs.cols() {
        let col = project_left(dir, normal, &lbs.column(j));
        lbs.set_column(j, &col);
    }
    let c = n_perp.adjoint_mul(&lbs);
    let rhs = DenseMatrix::from_column(&n_perp.adjoint_mul_vec(r).neg());
    let y = lu_solve(&c, &rhs, tol)?;
    Ok(s_perp.mul_vec(&y.column(0)))
}
