mod common;

use common::*;
use jd_diag::correction::{solve_standard, solve_subspace, SubspaceMode};
use jd_diag::fixtures::{seeded_rng, InstanceKind};
use jd_diag::stagnation::{
    check_defectiveness_implication, stagnation_nullspace_form, stagnation_predicate_standard,
    stagnation_predicate_subspace,
};
use jd_diag::*;
use rand::Rng;

fn decision(s: Solvability) -> Decision {
    match s {
        Solvability::Unique => Decision::Unique,
        Solvability::NoSolution => Decision::None,
        Solvability::Infinite => Decision::Infinite,
    }
}

#[test]
fn random_classifications_match_brute_force() {
    let tol = Tolerance::default();
    let mut rng = seeded_rng(100);
    let mut checked = 0;
    while checked < 300 {
        let n = rng.random_range(3..=8);
        let k = rng.random_range(1..n);
        let Some(case) = random_case(&mut rng, n, k) else {
            continue;
        };
        let u = &case.pair.ritz_vector;
        let std = classify_standard(&case.a, case.pair.value, u, &tol).unwrap();
        assert_ne!(std.class, Solvability::Infinite);
        let brute = brute_force(
            &case.a,
            case.pair.value,
            &DenseMatrix::from_column(u),
            &case.pair.residual,
        );
        assert_eq!(decision(std.class), brute);
        let sub = classify_subspace(&case.a, case.pair.value, &case.w, u, &tol).unwrap();
        assert_eq!(
            decision(sub.class),
            brute_force(&case.a, case.pair.value, &case.w, &case.pair.residual)
        );
        checked += 1;
    }
}

#[test]
fn constructed_classifications_match_brute_force() {
    let tol = Tolerance::default();
    let mut rng = seeded_rng(101);
    for i in 0..60 {
        let kind = if i % 2 == 0 {
            InstanceKind::Inconsistent
        } else {
            InstanceKind::Underdetermined
        };
        let c = constructed_case(&mut rng, kind);
        let expected = if kind == InstanceKind::Inconsistent {
            Decision::None
        } else {
            Decision::Infinite
        };
        let brute = brute_force(&c.a, c.value, &c.w, &c.r);
        assert_eq!(
            brute,
            expected,
            "i={i} n={} k={} w={}",
            c.a.rows(),
            c.basis.dim(),
            c.w.cols()
        );
        let rep = if c.w.cols() == 1 {
            classify_standard(&c.a, c.value, &c.u, &tol).unwrap()
        } else {
            classify_subspace(&c.a, c.value, &c.w, &c.u, &tol).unwrap()
        };
        assert_eq!(decision(rep.class), brute, "{kind:?} w = {}", c.w.cols());
        let std = classify_standard(&c.a, c.value, &c.u, &tol).unwrap();
        assert_ne!(std.class, Solvability::Infinite);
    }
}

#[test]
fn stagnation_predicates_agree_and_imply_defectiveness() {
    let tol = Tolerance::default();
    let mut rng = seeded_rng(102);
    let mut stagnant = 0;
    for i in 0..560 {
        let (a, basis, value, u, r) = if i % 10 == 9 {
            let c = constructed_case(&mut rng, InstanceKind::Stagnant);
            (c.a, c.basis, c.value, c.u, c.r)
        } else {
            let n = rng.random_range(3..=10);
            let k = rng.random_range(1..=4.min(n - 1));
            let Some(c) = random_case(&mut rng, n, k) else { continue };
            (c.a, c.basis, c.pair.value, c.pair.ritz_vector, c.pair.residual)
        };
        if classify_standard(&a, value, &u, &tol).unwrap().class != Solvability::Unique {
            continue;
        }
        let (null, _) = stagnation_nullspace_form(&a, value, &basis, &u, &r, &tol).unwrap();
        let span = stagnation_predicate_standard(&a, value, &basis, &u, &tol).unwrap();
        let sol = solve_standard(&a, value, &u, &r, &tol).unwrap();
        let triv = expansion_is_trivial(&sol.v, &basis, &tol).unwrap();
        assert_eq!(null.stagnates, span.stagnates);
        assert_eq!(null.stagnates, triv.trivial);
        assert!(span.forms_agree && null.forms_agree);
        let t = ProjectedMatrix::new(&a, &basis).unwrap();
        assert!(check_defectiveness_implication(&span, &t, value, &tol));
        if span.stagnates {
            stagnant += 1;
            assert!(span.defective);
        }
    }
    assert!(stagnant >= 50);
}

#[test]
fn full_subspace_never_stagnates() {
    let tol = Tolerance::default();
    let mut rng = seeded_rng(103);
    for i in 0..200 {
        let (a, basis, value, u, r) = if i % 4 == 3 {
            let c = constructed_case(&mut rng, InstanceKind::Stagnant);
            (c.a, c.basis, c.value, c.u, c.r)
        } else {
            let n = rng.random_range(3..=8);
            let k = rng.random_range(1..n);
            let Some(c) = random_case(&mut rng, n, k) else { continue };
            (c.a, c.basis, c.pair.value, c.pair.ritz_vector, c.pair.residual)
        };
        let w = basis.matrix().clone();
        if classify_subspace(&a, value, &w, &u, &tol).unwrap().class != Solvability::Unique {
            continue;
        }
        let rep = stagnation_predicate_subspace(&a, value, &basis, &w, &u, &tol).unwrap();
        assert!(!rep.stagnates);
        let sol = solve_subspace(&a, value, &w, &r, &tol, SubspaceMode::Strict).unwrap();
        assert!(!expansion_is_trivial(&sol.v, &basis, &tol).unwrap().trivial);
        assert!(sol.side_orthogonality <= 1e-12);
    }
}

#[test]
fn non_defective_projection_never_stagnates() {
    let tol = Tolerance::default();
    let mut rng = seeded_rng(104);
    for _ in 0..200 {
        let n = rng.random_range(3..=8);
        let k = rng.random_range(1..n);
        let Some(c) = random_case(&mut rng, n, k) else { continue };
        let t = ProjectedMatrix::new(&c.a, &c.basis).unwrap();
        if is_defective(t.matrix(), c.pair.value, &tol).unwrap().defective {
            continue;
        }
        if let Ok(rep) = stagnation_predicate_standard(&c.a, c.pair.value, &c.basis, &c.pair.ritz_vector, &tol) {
            assert!(!rep.stagnates);
            assert!(check_defectiveness_implication(&rep, &t, c.pair.value, &tol));
        }
    }
}
