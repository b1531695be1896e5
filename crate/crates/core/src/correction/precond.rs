use serde::{Deserialize, Serialize};

use super::classify::check_dim;
use super::{backward_error, CorrectionError};
use crate::linalg::{DenseMatrix, Lu, Tolerance, Vector, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreconditionedSolution {
    pub z: Vector,
    /// `uᴴK⁻¹u`.
    pub witness: C64,
    /// `‖K⁻¹u‖`.
    pub witness_scale: f64,
    /// Backward error of `z` in `(I − uuᴴ)K(I − uuᴴ)z = (I − uuᴴ)y`.
    pub equation_residual: f64,
    /// `|uᴴz| / ‖z‖`.
    pub side_orthogonality: f64,
}

/// Solves `(I − uuᴴ)K(I − uuᴴ)z = (I − uuᴴ)y` with `z ⊥ u` through
/// `z = K⁻¹ŷ − (uᴴK⁻¹ŷ / uᴴK⁻¹u)·K⁻¹u`, `ŷ = (I − uuᴴ)y`.
///
/// The system is inconsistent when `uᴴK⁻¹u` vanishes relative to `‖K⁻¹u‖`.
pub fn apply_projected_preconditioner(
    k: &DenseMatrix,
    u: &Vector,
    y: &Vector,
    tol: &Tolerance,
) -> Result<PreconditionedSolution, CorrectionError> {
    tol.validate()?;
    check_dim(k, u.len())?;
    check_dim(k, y.len())?;
    let nu = u.norm();
    if (nu - 1.0).abs() > 1e-10 {
        return Err(CorrectionError::InvalidPayload(format!("‖u‖ = {nu} is not 1")));
    }
    let lu = Lu::factor(k, tol)?;
    let yh = y.sub(&u.scale(u.dot(y)));
    let ku = lu.solve_vec(u);
    let s = u.dot(&ku);
    let scale = ku.norm();
    if s.norm() <= tol.membership_tol * scale {
        return Err(CorrectionError::Inconsistent { witness: s.norm() });
    }
    let ky = lu.solve_vec(&yh);
    let z = ky.sub(&ku.scale(u.dot(&ky) / s));

    let proj = |x: &Vector| x.sub(&u.scale(u.dot(x)));
    let lhs = proj(&k.mul_vec(&proj(&z)));
    let zn = z.norm();
    Ok(PreconditionedSolution {
        equation_residual: backward_error(&lhs, &yh, k.norm_fro(), zn),
        side_orthogonality: if zn == 0.0 { 0.0 } else { u.dot(&z).norm() / zn },
        z,
        witness: s,
        witness_scale: scale,
    })
}
