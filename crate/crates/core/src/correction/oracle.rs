use serde::{Deserialize, Serialize};

use super::classify::check_dim;
use super::CorrectionError;
use crate::linalg::{orthonormal_complement, svd, DenseMatrix, Tolerance, Vector, C64};

/// Outcome of the complement-system test for `(I − uuᴴ)(A − ρI)(I − uuᴴ)v = −r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FengJiaClass {
    NoSolution,
    AtLeastOne,
    Unique,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FengJiaReport {
    pub class: FengJiaClass,
    /// `M⊥ = U⊥ᴴAU⊥ − ρI`.
    pub projected: DenseMatrix,
    /// `b = U⊥ᴴr` with `r = Au − ρu`.
    pub rhs: Vector,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// `min_x ‖M⊥x − b‖`.
    pub least_squares_residual: f64,
    /// Least-squares residual relative to `‖b‖`.
    pub relative_residual: f64,
}

/// Decides solvability directly on the projected system `M⊥w = −b`:
/// no solution when `b ∉ range(M⊥)`, unique when `M⊥` is nonsingular, and at
/// least one otherwise. Singular values at or below
/// `membership_tol · σ_max(M⊥)` count as zero.
pub fn classify_feng_jia_oracle(
    a: &DenseMatrix,
    rho: C64,
    u: &Vector,
    tol: &Tolerance,
) -> Result<FengJiaReport, CorrectionError> {
    tol.validate()?;
    check_dim(a, u.len())?;
    let nu = u.norm();
    if (nu - 1.0).abs() > 1e-10 {
        return Err(CorrectionError::InvalidPayload(format!("‖u‖ = {nu} is not 1")));
    }
    let n = a.rows();
    if n < 2 {
        return Err(CorrectionError::InvalidPayload("need n ≥ 2".into()));
    }
    let r = a.mul_vec(u).sub(&u.scale(rho));
    let uc = orthonormal_complement(&DenseMatrix::from_column(u))?;
    let projected = uc.adjoint_mul(&a.matmul(&uc)).shifted(rho);
    let rhs = uc.adjoint_mul_vec(&r);
    let d = svd(&projected)?;
    let threshold = tol.membership_tol * d.sigma_max();
    let rank = if d.sigma_max() == 0.0 { 0 } else { d.rank(threshold) };
    let lsq = d.range_residual(&rhs, rank);
    let bn = rhs.norm();
    let relative_residual = if bn == 0.0 { 0.0 } else { lsq / bn };
    let class = if relative_residual > tol.membership_tol {
        FengJiaClass::NoSolution
    } else if rank == n - 1 {
        FengJiaClass::Unique
    } else {
        FengJiaClass::AtLeastOne
    };
    Ok(FengJiaReport {
        class,
        projected,
        rhs,
        sigma_min: d.sigma_min(),
        sigma_max: d.sigma_max(),
        least_squares_residual: lsq,
        relative_residual,
    })
}
