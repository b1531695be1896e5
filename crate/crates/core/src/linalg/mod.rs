//! Self-contained dense complex linear algebra.
//!
//! Everything here works on small, dense, column-major matrices: LU with
//! partial pivoting, Householder orthonormal completion, Gram-Schmidt
//! orthonormalization, a one-sided Jacobi SVD for rank decisions, and a
//! Hessenberg + shifted-QR eigensolver for the projected problems.

mod eig;
mod lu;
mod matrix;
mod qr;
mod svd;
mod tolerance;

pub use eig::{schur, small_eig, small_eig_with_cap, EigenPair, Schur, DEFAULT_EIG_CAP};
pub use lu::{lu_solve, lu_solve_vec, Lu};
pub use matrix::{DenseMatrix, Vector, C64};
pub use qr::{orthonormal_complement, orthonormalize, Orthonormalized};
pub use svd::{in_range, in_range_with_threshold, rank_and_nullspace, spectral_norm, svd, RangeCheck, RankInfo, Svd};
pub use tolerance::Tolerance;

pub(crate) use matrix::{cdot, ONE, ZERO};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix must have at least one row and one column")]
    EmptyMatrix,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix contains NaN or infinite entries")]
    NonFinite,
    #[error("operation requires a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is numerically singular (pivot {pivot:.3e} at column {column})")]
    SingularMatrix { column: usize, pivot: f64 },
    #[error("every column was dropped as linearly dependent")]
    EmptySpan,
    #[error("columns are not orthonormal (defect {defect:.3e})")]
    NotOrthonormal { defect: f64 },
    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },
    #[error("eigenproblem of order {order} exceeds the configured cap {cap}")]
    TooLarge { order: usize, cap: usize },
    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),
}
