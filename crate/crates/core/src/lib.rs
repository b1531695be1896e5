//! Dense complex Jacobi-Davidson eigensolver with diagnostics for the
//! correction equation: solvability classification, stagnation predicates and
//! the defectiveness check on the projected matrix.

pub mod correction;
pub mod fixtures;
pub mod linalg;
pub mod ritz;
pub mod solver;
pub mod stagnation;

pub use correction::{
    classify, classify_standard, classify_subspace, classify_two_sided, CorrectionError, CorrectionSolution,
    CorrectionVariant, Solvability, SolvabilityReport, TwoSidedKind, VariantTag, Witness,
};
pub use linalg::{DenseMatrix, LinalgError, Tolerance, Vector, C64};
pub use num_complex::Complex64;
pub use ritz::{extract_ritz, is_defective, Defectiveness, ProjectedMatrix, RitzError, RitzPair, SearchBasis};
pub use solver::{
    jd_solve, jd_solve_from_basis, jd_solve_two_sided, ExpansionAction, Fallback, IterationTrace, SolveOutcome,
    SolverConfig, SolverError, SolverVariant, TraceRow, TwoSidedOutcome,
};
pub use stagnation::{expansion_is_trivial, StagnationError, StagnationMethod, StagnationReport};
