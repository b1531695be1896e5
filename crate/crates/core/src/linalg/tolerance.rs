use serde::{Deserialize, Serialize};

use super::LinalgError;

/// Numerical thresholds used to turn exact-arithmetic tests ("is zero",
/// "is singular", "lies in the span") into decisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Relative singular-value cutoff. `None` means `dim · ε`, scaled by the
    /// largest singular value of the matrix under test.
    pub relative_rank_tol: Option<f64>,
    /// Relative residual below which a vector counts as a member of a span,
    /// and below which a witness counts as zero.
    pub membership_tol: f64,
    /// Radius, relative to `‖T‖`, inside which eigenvalues are treated as one
    /// cluster by the defectiveness test.
    pub cluster_tol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            relative_rank_tol: None,
            membership_tol: 1e-10,
            cluster_tol: 1e-8,
        }
    }
}

impl Tolerance {
    pub fn with_membership_tol(mut self, tol: f64) -> Self {
        self.membership_tol = tol;
        self
    }

    pub fn with_relative_rank_tol(mut self, tol: f64) -> Self {
        self.relative_rank_tol = Some(tol);
        self
    }

    pub fn validate(&self) -> Result<(), LinalgError> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if let Some(r) = self.relative_rank_tol {
            if !ok(r) {
                return Err(LinalgError::InvalidTolerance(format!(
                    "relative_rank_tol must be positive, got {r}"
                )));
            }
        }
        if !ok(self.membership_tol) {
            return Err(LinalgError::InvalidTolerance(format!(
                "membership_tol must be positive, got {}",
                self.membership_tol
            )));
        }
        if !ok(self.cluster_tol) {
            return Err(LinalgError::InvalidTolerance(format!(
                "cluster_tol must be positive, got {}",
                self.cluster_tol
            )));
        }
        Ok(())
    }

    /// Relative rank cutoff for a matrix whose larger dimension is `dim`.
    pub fn relative_rank(&self, dim: usize) -> f64 {
        self.relative_rank_tol.unwrap_or(dim.max(1) as f64 * f64::EPSILON)
    }

    /// Absolute singular-value cutoff for a matrix of dimension `dim`.
    pub fn rank_threshold(&self, dim: usize, sigma_max: f64) -> f64 {
        self.relative_rank(dim) * sigma_max
    }
}
