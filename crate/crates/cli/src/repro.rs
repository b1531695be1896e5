//! `repro`: the worked examples checked against their published values.

use std::io::Write;

use jd_diag::correction::{classify_feng_jia_oracle, solve_standard, solve_subspace, FengJiaClass, SubspaceMode};
use jd_diag::fixtures::{self, WorkedExample};
use jd_diag::linalg::{in_range, lu_solve_vec, orthonormal_complement};
use jd_diag::stagnation::{
    check_defectiveness_implication, stagnation_nullspace_form, stagnation_predicate_standard,
    stagnation_predicate_subspace,
};
use jd_diag::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::ReproArgs;
use crate::error::{exit, CliError};
use crate::report::Sink;

/// Componentwise tolerance for the published decimals and exact values.
pub const VALUE_TOL: f64 = 1e-12;
/// Bound on the Example 1 witness.
pub const WITNESS_TOL: f64 = 1e-14;

/// Inputs of the three worked examples; tests substitute corrupted copies.
#[derive(Debug, Clone)]
pub struct ReproFixtures {
    pub example1: WorkedExample,
    pub example2: WorkedExample,
    pub example3: WorkedExample,
}

impl Default for ReproFixtures {
    fn default() -> Self {
        Self {
            example1: fixtures::example1(),
            example2: fixtures::example2(),
            example3: fixtures::example3(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub expected: Value,
    pub observed: Value,
    pub tolerance: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproReport {
    pub command: String,
    pub assertions: Vec<Assertion>,
    pub passed: usize,
    pub failed: usize,
}

impl ReproReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    pub fn lines(&self) -> String {
        let mut s = String::new();
        for a in &self.assertions {
            let tag = if a.pass { "PASS" } else { "FAIL" };
            s.push_str(&format!("{tag} {}", a.name));
            if !a.pass {
                s.push_str(&format!(" (expected {}, observed {})", a.expected, a.observed));
            }
            s.push('\n');
        }
        s.push_str(&format!("{} passed, {} failed\n", self.passed, self.failed));
        s
    }
}

type Check = Result<(Value, bool), String>;

struct Recorder {
    out: Vec<Assertion>,
}

impl Recorder {
    fn check(&mut self, name: &str, expected: Value, tolerance: Option<f64>, f: impl FnOnce() -> Check) {
        let (observed, pass) = match f() {
            Ok(x) => x,
            Err(e) => (json!({ "error": e }), false),
        };
        self.out.push(Assertion {
            name: name.to_string(),
            expected,
            observed,
            tolerance,
            pass,
        });
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn real_vec(xs: &[f64]) -> Vector {
    Vector::from(xs.iter().map(|&x| c(x)).collect::<Vec<_>>())
}

fn real_mat<R: AsRef<[f64]>>(rows: &[R]) -> DenseMatrix {
    DenseMatrix::from_real_rows(rows).expect("fixed literal")
}

fn max_dev(x: &[C64], y: &[C64]) -> f64 {
    if x.len() != y.len() {
        return f64::INFINITY;
    }
    x.iter().zip(y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
}

fn close_vec(observed: &Vector, expected: &Vector) -> Check {
    Ok((
        json!(observed),
        max_dev(observed.as_slice(), expected.as_slice()) <= VALUE_TOL,
    ))
}

fn close_mat(observed: &DenseMatrix, expected: &DenseMatrix) -> Check {
    let same = observed.rows() == expected.rows() && observed.cols() == expected.cols();
    Ok((
        json!(observed),
        same && max_dev(observed.as_slice(), expected.as_slice()) <= VALUE_TOL,
    ))
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn basis(ex: &WorkedExample) -> Result<SearchBasis, String> {
    SearchBasis::new(ex.basis.clone()).map_err(err)
}

fn ritz(ex: &WorkedExample) -> Result<(RitzPair, ProjectedMatrix), String> {
    extract_ritz(&ex.a, &basis(ex)?, ex.target).map_err(err)
}

/// `U⊥ᴴ(A − I)U⊥` for `U⊥ = [e₂, …, eₙ]`.
fn trailing_shifted(a: &DenseMatrix) -> DenseMatrix {
    let n = a.rows();
    a.shifted(c(1.0)).block(1, n, 1, n)
}

/// The Ritz vector with its phase fixed so the first entry is real positive.
fn phased(u: &Vector) -> Vector {
    let z = u.as_slice()[0];
    if z.norm() == 0.0 {
        u.clone()
    } else {
        u.scale(z.conj() / z.norm())
    }
}

fn example1(rec: &mut Recorder, ex: &WorkedExample) {
    let tol = Tolerance::default();
    rec.check(
        "example1.ritz_pair",
        json!({ "value": c(1.0), "u": real_vec(&[1.0, 0.0, 0.0]), "r": real_vec(&[0.0, 1.0, 0.0]) }),
        Some(VALUE_TOL),
        || {
            let (p, _) = ritz(ex)?;
            let u = phased(&p.ritz_vector);
            let r = ex.a.mul_vec(&u).sub(&u.scale(p.value));
            let ok = (p.value - c(1.0)).norm() <= VALUE_TOL
                && max_dev(u.as_slice(), real_vec(&[1.0, 0.0, 0.0]).as_slice()) <= VALUE_TOL
                && max_dev(r.as_slice(), real_vec(&[0.0, 1.0, 0.0]).as_slice()) <= VALUE_TOL;
            Ok((json!({ "value": p.value, "u": u, "r": r }), ok))
        },
    );
    rec.check(
        "example1.witness_is_zero",
        json!({ "class": "None", "witness": 0.0 }),
        Some(WITNESS_TOL),
        || {
            let rep = classify_standard(&ex.a, c(1.0), &Vector::unit(ex.a.rows(), 0), &tol).map_err(err)?;
            let ok = rep.class == Solvability::NoSolution && rep.witness_magnitude <= WITNESS_TOL;
            Ok((json!({ "class": rep.class, "witness": rep.witness_magnitude }), ok))
        },
    );
    rec.check("example1.feng_jia_no_solution", json!("NoSolution"), None, || {
        let fj = classify_feng_jia_oracle(&ex.a, c(1.0), &Vector::unit(ex.a.rows(), 0), &tol).map_err(err)?;
        Ok((json!(format!("{:?}", fj.class)), fj.class == FengJiaClass::NoSolution))
    });
    rec.check(
        "example1.least_squares_residual",
        json!({ "greater_than": 0.5 }),
        None,
        || {
            let fj = classify_feng_jia_oracle(&ex.a, c(1.0), &Vector::unit(ex.a.rows(), 0), &tol).map_err(err)?;
            Ok((json!(fj.least_squares_residual), fj.least_squares_residual > 0.5))
        },
    );
    rec.check(
        "example1.complement_system_inconsistent",
        json!({ "in_range": false }),
        None,
        || {
            let n = ex.a.rows();
            let u = Vector::unit(n, 0);
            let proj = DenseMatrix::identity(n)
                .sub(&DenseMatrix::from_column(&u).matmul(&DenseMatrix::from_column(&u).adjoint()));
            let m = proj.matmul(&ex.a.shifted(c(1.0))).matmul(&proj);
            let b = ex.a.mul_vec(&u).sub(&u).neg();
            let check = in_range(&m, &b, &tol).map_err(err)?;
            let expected = real_mat(&[[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 1.0]]);
            let shape_ok = max_dev(m.as_slice(), expected.as_slice()) <= VALUE_TOL;
            Ok((
                json!({ "in_range": check.in_range, "matrix": m }),
                shape_ok && !check.in_range,
            ))
        },
    );
    rec.check(
        "example1.solver_falls_back",
        json!({ "class": "None", "action": "ResidualVector" }),
        None,
        || {
            let cfg = SolverConfig {
                target: ex.target,
                ..SolverConfig::default()
            };
            let out = jd_solve_from_basis(&ex.a, &ex.basis, &cfg).map_err(err)?;
            let row = out.trace.rows.first().ok_or("empty trace")?;
            let ok = row.right.class == Some(Solvability::NoSolution) && row.action == ExpansionAction::ResidualVector;
            Ok((json!({ "class": row.right.class, "action": row.action }), ok))
        },
    );
}

fn example2(rec: &mut Recorder, ex: &WorkedExample) {
    let tol = Tolerance::default();
    let t_expected = real_mat(&[[1.0, 1.0], [0.0, 1.0]]);
    rec.check(
        "example2.ritz_pair",
        json!({ "value": c(1.0), "u": real_vec(&[1.0, 0.0, 0.0, 0.0]), "r": real_vec(&[0.0, 0.0, 0.0, 1.0]) }),
        Some(VALUE_TOL),
        || {
            let (p, _) = ritz(ex)?;
            let u = phased(&p.ritz_vector);
            let r = ex.a.mul_vec(&u).sub(&u.scale(p.value));
            let ok = (p.value - c(1.0)).norm() <= VALUE_TOL
                && max_dev(u.as_slice(), real_vec(&[1.0, 0.0, 0.0, 0.0]).as_slice()) <= VALUE_TOL
                && max_dev(r.as_slice(), real_vec(&[0.0, 0.0, 0.0, 1.0]).as_slice()) <= VALUE_TOL;
            Ok((json!({ "value": p.value, "u": u, "r": r }), ok))
        },
    );
    let m2 = real_mat(&[[0.0, 2.0, -1.0], [0.0, -3.0, 2.0], [1.0 / 3.0, 4.0 / 3.0, -1.0]]);
    rec.check("example2.complement_operator", json!(m2), Some(VALUE_TOL), || {
        close_mat(&trailing_shifted(&ex.a), &m2)
    });
    rec.check("example2.projected_matrix", json!(t_expected), Some(VALUE_TOL), || {
        let (_, t) = ritz(ex)?;
        close_mat(t.matrix(), &t_expected)
    });
    rec.check(
        "example2.defective",
        json!({ "defective": true, "nullities": [1, 2] }),
        None,
        || {
            let (p, t) = ritz(ex)?;
            let d = is_defective(t.matrix(), p.value, &tol).map_err(err)?;
            Ok((json!(d), d.defective && (d.nullity1, d.nullity2) == (1, 2)))
        },
    );
    rec.check("example2.classification", json!("Unique"), None, || {
        let (p, _) = ritz(ex)?;
        let rep = classify_standard(&ex.a, p.value, &p.ritz_vector, &tol).map_err(err)?;
        Ok((json!(rep.class), rep.class == Solvability::Unique))
    });
    let v_expected = real_vec(&[0.0, -3.0, 0.0, 0.0]);
    rec.check("example2.correction", json!(v_expected), Some(VALUE_TOL), || {
        let (p, _) = ritz(ex)?;
        let sol = solve_standard(&ex.a, p.value, &p.ritz_vector, &p.residual, &tol).map_err(err)?;
        close_vec(&sol.v, &v_expected)
    });
    rec.check(
        "example2.complement_coordinates",
        json!(real_vec(&[-3.0, 0.0, 0.0])),
        Some(VALUE_TOL),
        || {
            let (p, _) = ritz(ex)?;
            let sol = solve_standard(&ex.a, p.value, &p.ritz_vector, &p.residual, &tol).map_err(err)?;
            let up = orthonormal_complement(&DenseMatrix::from_column(&p.ritz_vector)).map_err(err)?;
            close_vec(&up.adjoint_mul_vec(&sol.v), &real_vec(&[-3.0, 0.0, 0.0]))
        },
    );
    rec.check("example2.expansion_trivial", json!(true), None, || {
        let (p, _) = ritz(ex)?;
        let sol = solve_standard(&ex.a, p.value, &p.ritz_vector, &p.residual, &tol).map_err(err)?;
        let t = expansion_is_trivial(&sol.v, &basis(ex)?, &tol).map_err(err)?;
        Ok((json!(t.trivial), t.trivial))
    });
    let proj_expected = real_mat(&[
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 2.0, 0.0],
    ]);
    rec.check(
        "example2.nullspace_form",
        json!({ "range_projector": proj_expected, "image_of_residual": 0.0, "stagnates": true }),
        Some(VALUE_TOL),
        || {
            let (p, _) = ritz(ex)?;
            let (rep, blocks) =
                stagnation_nullspace_form(&ex.a, p.value, &basis(ex)?, &p.ritz_vector, &p.residual, &tol)
                    .map_err(err)?;
            let proj = blocks.range_projector();
            let image = proj.mul_vec(&p.residual).norm();
            let ok = close_mat(&proj, &proj_expected)?.1 && image <= VALUE_TOL && rep.stagnates;
            Ok((
                json!({ "range_projector": proj, "image_of_residual": image, "stagnates": rep.stagnates }),
                ok,
            ))
        },
    );
    rec.check(
        "example2.span_criterion",
        json!({ "stagnates": true, "defective": true }),
        None,
        || {
            let (p, _) = ritz(ex)?;
            let rep = stagnation_predicate_standard(&ex.a, p.value, &basis(ex)?, &p.ritz_vector, &tol).map_err(err)?;
            Ok((
                json!({ "stagnates": rep.stagnates, "defective": rep.defective }),
                rep.stagnates && rep.defective,
            ))
        },
    );
    rec.check(
        "example2.full_subspace_escapes",
        json!({ "stagnates": false }),
        None,
        || {
            let (p, _) = ritz(ex)?;
            let b = basis(ex)?;
            let rep =
                stagnation_predicate_subspace(&ex.a, p.value, &b, b.matrix(), &p.ritz_vector, &tol).map_err(err)?;
            let sol =
                solve_subspace(&ex.a, p.value, b.matrix(), &p.residual, &tol, SubspaceMode::Strict).map_err(err)?;
            let trivial = expansion_is_trivial(&sol.v, &b, &tol).map_err(err)?.trivial;
            Ok((
                json!({ "stagnates": rep.stagnates, "trivial": trivial }),
                !rep.stagnates && !trivial,
            ))
        },
    );
    rec.check("example2.implication", json!(true), None, || {
        let (p, t) = ritz(ex)?;
        let rep = stagnation_predicate_standard(&ex.a, p.value, &basis(ex)?, &p.ritz_vector, &tol).map_err(err)?;
        let ok = check_defectiveness_implication(&rep, &t, p.value, &tol);
        Ok((json!(ok), ok && rep.stagnates))
    });
    rec.check(
        "example2.solver_records_stagnation",
        json!({ "class": "Unique", "stagnates": true, "defective": true, "action": "ResidualVector" }),
        None,
        || {
            let cfg = SolverConfig {
                target: ex.target,
                ..SolverConfig::default()
            };
            let out = jd_solve_from_basis(&ex.a, &ex.basis, &cfg).map_err(err)?;
            let row = out.trace.rows.first().ok_or("empty trace")?;
            let ok = row.right.class == Some(Solvability::Unique)
                && row.right.stagnates == Some(true)
                && row.defective
                && row.action == ExpansionAction::ResidualVector;
            Ok((
                json!({ "class": row.right.class, "stagnates": row.right.stagnates, "defective": row.defective, "action": row.action }),
                ok,
            ))
        },
    );
}

fn example3(rec: &mut Recorder, ex: &WorkedExample) {
    let tol = Tolerance::default();
    let m3 = real_mat(&[[0.0, 2.0, 6.0], [2.0, 2.0, 7.0], [4.0, 4.0, 7.0]]);
    let sol_exact = real_vec(&[-4.0 / 7.0, -3.0 / 7.0, 1.0 / 7.0]);
    let decimals = real_vec(&[-0.571428571428571, -0.428571428571429, 0.142857142857143]);
    rec.check("example3.complement_operator", json!(m3), Some(VALUE_TOL), || {
        close_mat(&trailing_shifted(&ex.a), &m3)
    });
    rec.check("example3.complement_system", json!(sol_exact), Some(VALUE_TOL), || {
        let x = lu_solve_vec(&m3, &real_vec(&[0.0, -1.0, -3.0]), &tol).map_err(err)?;
        close_vec(&x, &sol_exact)
    });
    rec.check("example3.classification", json!("Unique"), None, || {
        let (p, _) = ritz(ex)?;
        let rep = classify_standard(&ex.a, p.value, &p.ritz_vector, &tol).map_err(err)?;
        Ok((json!(rep.class), rep.class == Solvability::Unique))
    });
    rec.check(
        "example3.complement_coordinates",
        json!(decimals),
        Some(VALUE_TOL),
        || {
            let (p, _) = ritz(ex)?;
            let sol = solve_standard(&ex.a, p.value, &p.ritz_vector, &p.residual, &tol).map_err(err)?;
            let up = orthonormal_complement(&DenseMatrix::from_column(&p.ritz_vector)).map_err(err)?;
            close_vec(&up.adjoint_mul_vec(&sol.v), &decimals)
        },
    );
    let v3 = real_vec(&[0.0, -4.0 / 7.0, -3.0 / 7.0, 1.0 / 7.0]);
    rec.check("example3.correction", json!(v3), Some(VALUE_TOL), || {
        let (p, _) = ritz(ex)?;
        let sol = solve_standard(&ex.a, p.value, &p.ritz_vector, &p.residual, &tol).map_err(err)?;
        close_vec(&sol.v, &v3)
    });
    rec.check("example3.expansion_not_trivial", json!(false), None, || {
        let (p, _) = ritz(ex)?;
        let sol = solve_standard(&ex.a, p.value, &p.ritz_vector, &p.residual, &tol).map_err(err)?;
        let t = expansion_is_trivial(&sol.v, &basis(ex)?, &tol).map_err(err)?;
        Ok((json!(t.trivial), !t.trivial))
    });
    rec.check("example3.nullspace_form", json!({ "stagnates": false }), None, || {
        let (p, _) = ritz(ex)?;
        let (rep, _) =
            stagnation_nullspace_form(&ex.a, p.value, &basis(ex)?, &p.ritz_vector, &p.residual, &tol).map_err(err)?;
        Ok((json!({ "stagnates": rep.stagnates }), !rep.stagnates))
    });
    rec.check(
        "example3.defective_not_stagnant",
        json!({ "stagnates": false, "defective": true, "nullities": [1, 2] }),
        None,
        || {
            let (p, t) = ritz(ex)?;
            let rep = stagnation_predicate_standard(&ex.a, p.value, &basis(ex)?, &p.ritz_vector, &tol).map_err(err)?;
            let d = is_defective(t.matrix(), p.value, &tol).map_err(err)?;
            let ok = !rep.stagnates && d.defective && (d.nullity1, d.nullity2) == (1, 2);
            Ok((
                json!({ "stagnates": rep.stagnates, "defective": d.defective, "nullities": [d.nullity1, d.nullity2] }),
                ok,
            ))
        },
    );
    rec.check("example3.implication", json!(true), None, || {
        let (p, t) = ritz(ex)?;
        let rep = stagnation_predicate_standard(&ex.a, p.value, &basis(ex)?, &p.ritz_vector, &tol).map_err(err)?;
        let ok = check_defectiveness_implication(&rep, &t, p.value, &tol);
        Ok((json!(ok), ok))
    });
}

/// Runs every assertion against the given fixtures.
pub fn run_with(fx: &ReproFixtures) -> ReproReport {
    let mut rec = Recorder { out: Vec::new() };
    example1(&mut rec, &fx.example1);
    example2(&mut rec, &fx.example2);
    example3(&mut rec, &fx.example3);
    let passed = rec.out.iter().filter(|a| a.pass).count();
    ReproReport {
        command: "repro".into(),
        failed: rec.out.len() - passed,
        passed,
        assertions: rec.out,
    }
}

pub fn run(args: &ReproArgs, fx: &ReproFixtures, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let rep = run_with(fx);
    if args.json {
        Sink { out: args.out.clone() }.emit(&rep, stdout)?;
    } else {
        let text = rep.lines();
        match &args.out {
            Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?,
            None => stdout.write_all(text.as_bytes())?,
        }
    }
    Ok(if rep.all_passed() { exit::OK } else { exit::REPRO_FAILED })
}
