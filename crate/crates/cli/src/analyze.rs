//! `analyze`: one Ritz extraction followed by the full diagnostic pass.

use std::io::Write;

use jd_diag::correction::{solve_standard, solve_subspace, solve_two_sided, SubspaceMode};
use jd_diag::linalg::{orthonormal_complement, orthonormalize};
use jd_diag::ritz::{extract_two_sided, ranked_ritz_pairs};
use jd_diag::stagnation::{
    stagnation_nullspace_form, stagnation_predicate_standard, stagnation_predicate_subspace,
    stagnation_predicate_two_sided, TrivialityCheck,
};
use jd_diag::*;
use serde::{Deserialize, Serialize};

use crate::args::{AnalyzeArgs, VariantArg};
use crate::error::CliError;
use crate::report::{fmt_c64, fmt_vec, load, InputDigest, Sink, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub settings: AnalyzeSettings,
    pub basis: BasisSummary,
    pub ritz: RitzSummary,
    /// Defectiveness of the Ritz value in the (right) projected matrix.
    pub defectiveness: Defectiveness,
    /// One entry per correction equation: a single one for one-sided
    /// variants, right then left for two-sided ones.
    pub sides: Vec<SideReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeSettings {
    pub target: C64,
    pub variant: SolverVariant,
    /// Dimension of `W` for the subspace variants.
    pub subspace_dim: Option<usize>,
    pub tolerances: Tolerance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSummary {
    pub dim: usize,
    /// Input columns dropped as linearly dependent (0-based).
    pub dropped: Vec<usize>,
    pub left_dim: Option<usize>,
    pub left_dropped: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RitzSummary {
    pub value: C64,
    pub vector: Vector,
    pub residual: Vector,
    pub residual_norm: f64,
    pub left_vector: Option<Vector>,
    pub left_residual: Option<Vector>,
    pub left_residual_norm: Option<f64>,
    /// `VᴴAV`, or `(PᴴQ)⁻¹PᴴAQ` for two-sided variants.
    pub projected: DenseMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideReport {
    pub equation: VariantTag,
    pub classification: SolvabilityReport,
    pub correction: Option<CorrectionSummary>,
    pub stagnation: Option<StagnationReport>,
    pub nullspace_form: Option<NullspaceSummary>,
    pub triviality: Option<TrivialityCheck>,
    /// `¬stagnates ∨ defective`.
    pub implication_holds: Option<bool>,
    /// Why a diagnostic was skipped.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionSummary {
    pub v: Vector,
    pub equation_residual: f64,
    pub side_orthogonality: f64,
    pub path_deviation: f64,
    /// `U⊥ᴴv` in the complement basis of the Ritz vector (standard variant).
    pub complement_coordinates: Option<Vector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullspaceSummary {
    pub stagnates: bool,
    pub predicate_value: f64,
    /// `V̂₃B₂₂V̂₃ᴴ`.
    pub range_projector: DenseMatrix,
}

impl SideReport {
    fn new(classification: SolvabilityReport) -> Self {
        Self {
            equation: classification.variant,
            classification,
            correction: None,
            stagnation: None,
            nullspace_form: None,
            triviality: None,
            implication_holds: None,
            notes: Vec::new(),
        }
    }

    fn note(&mut self, what: &str, e: impl std::fmt::Display) {
        self.notes.push(format!("{what}: {e}"));
    }

    fn set_correction(&mut self, sol: CorrectionSolution, coords: Option<Vector>) {
        self.correction = Some(CorrectionSummary {
            v: sol.v,
            equation_residual: sol.equation_residual,
            side_orthogonality: sol.side_orthogonality,
            path_deviation: sol.path_deviation,
            complement_coordinates: coords,
        });
    }

    fn set_stagnation(&mut self, rep: StagnationReport) {
        self.implication_holds = Some(rep.implication_holds());
        self.stagnation = Some(rep);
    }
}

fn require_square(a: &DenseMatrix) -> Result<(), CliError> {
    if a.is_square() {
        Ok(())
    } else {
        Err(CliError::Dimension(format!(
            "matrix is {}x{}, expected square",
            a.rows(),
            a.cols()
        )))
    }
}

fn require_rows(b: &DenseMatrix, n: usize, what: &str) -> Result<(), CliError> {
    if b.rows() == n {
        Ok(())
    } else {
        Err(CliError::Dimension(format!(
            "{what} has {} rows, matrix order is {n}",
            b.rows()
        )))
    }
}

pub fn analyze(args: &AnalyzeArgs, tol: &Tolerance) -> Result<AnalyzeReport, CliError> {
    tol.validate()?;
    let (afile, adig) = load(&args.matrix, "matrix")?;
    let (bfile, bdig) = load(&args.basis, "basis")?;
    let a = afile.matrix;
    require_square(&a)?;
    require_rows(&bfile.matrix, a.rows(), "basis")?;
    let mut inputs = vec![adig, bdig];
    let (basis, dropped) = SearchBasis::from_columns(&bfile.matrix, tol)?;
    let target = args.common.target;
    let variant = SolverVariant::from(args.common.variant);

    let mut settings = AnalyzeSettings {
        target,
        variant,
        subspace_dim: None,
        tolerances: *tol,
    };
    let mut summary = BasisSummary {
        dim: basis.dim(),
        dropped,
        left_dim: None,
        left_dropped: None,
    };

    if variant.is_two_sided() {
        let left = match &args.left_basis {
            Some(path) => {
                let (lfile, ldig) = load(path, "left-basis")?;
                require_rows(&lfile.matrix, a.rows(), "left basis")?;
                inputs.push(ldig);
                lfile.matrix
            }
            None => bfile.matrix.clone(),
        };
        let (pb, ldropped) = SearchBasis::from_columns(&left, tol)?;
        if pb.dim() != basis.dim() {
            return Err(CliError::Dimension(format!(
                "left basis spans {} dimensions, right basis {}",
                pb.dim(),
                basis.dim()
            )));
        }
        summary.left_dim = Some(pb.dim());
        summary.left_dropped = Some(ldropped);
        let (triple, pencil) = extract_two_sided(&a, basis.matrix(), pb.matrix(), target, tol)?;
        let defectiveness = is_defective(&pencil.right, triple.theta, tol)?;
        let kinds = match args.common.variant {
            VariantArg::Bi => [TwoSidedKind::BiRight, TwoSidedKind::BiLeft],
            _ => [TwoSidedKind::OrthRight, TwoSidedKind::OrthLeft],
        };
        let mut sides = Vec::new();
        for kind in kinds {
            let class = classify_two_sided(&a, triple.theta, &triple.q, &triple.p, kind, tol)?;
            let mut side = SideReport::new(class);
            if side.classification.is_unique() {
                let (r, own) = if kind.is_left() {
                    (&triple.left_residual, &pb)
                } else {
                    (&triple.right_residual, &basis)
                };
                match solve_two_sided(&a, triple.theta, &triple.q, &triple.p, kind, r, tol) {
                    Ok(sol) => {
                        match expansion_is_trivial(&sol.v, own, tol) {
                            Ok(t) => side.triviality = Some(t),
                            Err(e) => side.note("triviality", e),
                        }
                        side.set_correction(sol, None);
                    }
                    Err(e) => side.note("correction", e),
                }
                match stagnation_predicate_two_sided(
                    &a,
                    triple.theta,
                    basis.matrix(),
                    pb.matrix(),
                    &triple.q,
                    &triple.p,
                    kind,
                    tol,
                ) {
                    Ok(rep) => side.set_stagnation(rep),
                    Err(e) => side.note("stagnation", e),
                }
            }
            sides.push(side);
        }
        let ritz = RitzSummary {
            value: triple.theta,
            residual_norm: triple.right_residual_norm(),
            left_residual_norm: Some(triple.left_residual_norm()),
            vector: triple.q,
            residual: triple.right_residual,
            left_vector: Some(triple.p),
            left_residual: Some(triple.left_residual),
            projected: pencil.right,
        };
        return Ok(AnalyzeReport {
            command: "analyze".into(),
            inputs,
            settings,
            basis: summary,
            ritz,
            defectiveness,
            sides,
        });
    }

    let (pairs, proj) = ranked_ritz_pairs(&a, &basis, target)?;
    let pair = pairs[0].clone();
    let (lambda, u, r) = (pair.value, &pair.ritz_vector, &pair.residual);
    let defectiveness = is_defective(proj.matrix(), lambda, tol)?;

    let side = match variant {
        SolverVariant::Standard => {
            let mut side = SideReport::new(classify_standard(&a, lambda, u, tol)?);
            if side.classification.is_unique() {
                match solve_standard(&a, lambda, u, r, tol) {
                    Ok(sol) => {
                        let coords = orthonormal_complement(&DenseMatrix::from_column(u))?.adjoint_mul_vec(&sol.v);
                        match expansion_is_trivial(&sol.v, &basis, tol) {
                            Ok(t) => side.triviality = Some(t),
                            Err(e) => side.note("triviality", e),
                        }
                        side.set_correction(sol, Some(coords));
                    }
                    Err(e) => side.note("correction", e),
                }
                match stagnation_predicate_standard(&a, lambda, &basis, u, tol) {
                    Ok(rep) => side.set_stagnation(rep),
                    Err(e) => side.note("stagnation", e),
                }
                match stagnation_nullspace_form(&a, lambda, &basis, u, r, tol) {
                    Ok((rep, blocks)) => {
                        side.nullspace_form = Some(NullspaceSummary {
                            stagnates: rep.stagnates,
                            predicate_value: rep.predicate_value,
                            range_projector: blocks.range_projector(),
                        })
                    }
                    Err(e) => side.note("nullspace form", e),
                }
            }
            side
        }
        _ => {
            let w = if variant == SolverVariant::FullSubspace {
                basis.matrix().clone()
            } else {
                let m = args.common.wdim.clamp(1, pairs.len());
                let cols: Vec<Vector> = pairs.iter().take(m).map(|p| p.ritz_vector.clone()).collect();
                orthonormalize(&DenseMatrix::from_columns(&cols), tol)?.q
            };
            settings.subspace_dim = Some(w.cols());
            let mut side = SideReport::new(classify_subspace(&a, lambda, &w, u, tol)?);
            if side.classification.is_unique() {
                match solve_subspace(&a, lambda, &w, r, tol, SubspaceMode::Strict) {
                    Ok(sol) => {
                        match expansion_is_trivial(&sol.v, &basis, tol) {
                            Ok(t) => side.triviality = Some(t),
                            Err(e) => side.note("triviality", e),
                        }
                        side.set_correction(sol, None);
                    }
                    Err(e) => side.note("correction", e),
                }
                match stagnation_predicate_subspace(&a, lambda, &basis, &w, u, tol) {
                    Ok(rep) => side.set_stagnation(rep),
                    Err(e) => side.note("stagnation", e),
                }
            }
            side
        }
    };

    Ok(AnalyzeReport {
        command: "analyze".into(),
        inputs,
        settings,
        basis: summary,
        ritz: RitzSummary {
            value: lambda,
            residual_norm: pair.residual_norm(),
            vector: pair.ritz_vector,
            residual: pair.residual,
            left_vector: None,
            left_residual: None,
            left_residual_norm: None,
            projected: proj.matrix().clone(),
        },
        defectiveness,
        sides: vec![side],
    })
}

pub fn table(rep: &AnalyzeReport) -> String {
    let mut t = Table::default();
    t.row("target", fmt_c64(rep.settings.target))
        .row("variant", format!("{:?}", rep.settings.variant))
        .row("basis dim", rep.basis.dim)
        .row("ritz value", fmt_c64(rep.ritz.value))
        .row("residual norm", format!("{:.6e}", rep.ritz.residual_norm))
        .row("defective", rep.defectiveness.defective)
        .row(
            "nullities",
            format!("({}, {})", rep.defectiveness.nullity1, rep.defectiveness.nullity2),
        );
    for side in &rep.sides {
        let p = format!("{:?}", side.equation);
        t.row(format!("{p} class"), side.classification.class).row(
            format!("{p} witness"),
            format!("{:.6e}", side.classification.witness_magnitude),
        );
        if let Some(c) = &side.correction {
            t.row(format!("{p} v"), fmt_vec(&c.v));
            if let Some(x) = &c.complement_coordinates {
                t.row(format!("{p} U⊥ᴴv"), fmt_vec(x));
            }
        }
        if let Some(s) = &side.stagnation {
            t.row(format!("{p} stagnates"), s.stagnates);
        }
        if let Some(tr) = &side.triviality {
            t.row(format!("{p} trivial"), tr.trivial);
        }
        for n in &side.notes {
            t.row(format!("{p} note"), n);
        }
    }
    t.render()
}

pub fn run(
    args: &AnalyzeArgs,
    tol: &Tolerance,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let rep = analyze(args, tol)?;
    if args.common.verbose {
        stderr.write_all(table(&rep).as_bytes())?;
    }
    Sink {
        out: args.common.out.clone(),
    }
    .emit(&rep, stdout)
}
