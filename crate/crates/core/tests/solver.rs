mod common;

use common::*;
use jd_diag::fixtures::{self, seeded_rng};
use jd_diag::*;
use rand::Rng;

fn cfg(variant: SolverVariant, target: C64) -> SolverConfig {
    SolverConfig {
        target,
        variant,
        max_outer: 400,
        m_max: 12,
        ..SolverConfig::default()
    }
}

#[test]
fn basis_grows_by_one_between_restarts() {
    let mut rng = seeded_rng(200);
    for variant in [
        SolverVariant::Standard,
        SolverVariant::Subspace,
        SolverVariant::FullSubspace,
    ] {
        let a = fixtures::random_hermitian(&mut rng, 30);
        let v0 = fixtures::random_vector(&mut rng, 30);
        let out = jd_solve(&a, &v0, &cfg(variant, C64::new(0.0, 0.0))).unwrap();
        let rows = &out.trace.rows;
        for w in rows.windows(2) {
            match w[1].action {
                ExpansionAction::Restart => assert!(w[1].basis_dim <= 12),
                _ => assert_eq!(w[1].basis_dim, w[0].basis_dim + 1, "{variant:?}"),
            }
        }
        assert!(rows.iter().all(|r| r.basis_dim <= 12));
    }
}

#[test]
fn converged_pairs_are_eigenpairs_of_the_oracle() {
    let mut rng = seeded_rng(201);
    for _ in 0..10 {
        let n = rng.random_range(8..=20);
        let a = fixtures::random_matrix(&mut rng, n, n);
        let target = fixtures::random_complex(&mut rng);
        let v0 = fixtures::random_vector(&mut rng, n);
        let out = jd_solve(&a, &v0, &cfg(SolverVariant::Standard, target)).unwrap();
        assert!(out.converged);
        let pair = &out.eigenpair;
        let r = a.mul_vec(&pair.vector).sub(&pair.vector.scale(pair.value));
        assert!(r.norm() <= 1e-10 * a.norm_fro() * 1.01);
        let nearest = eigenvalues(&a)
            .into_iter()
            .map(|l| (l - pair.value).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(nearest <= 1e-8);
    }
}

#[test]
fn full_subspace_sweep_has_no_stagnation_events() {
    let mut rng = seeded_rng(202);
    for _ in 0..20 {
        let n = rng.random_range(6..=15);
        let a = fixtures::random_matrix(&mut rng, n, n);
        let v0 = fixtures::random_vector(&mut rng, n);
        let target = fixtures::random_complex(&mut rng);
        let out = match jd_solve(&a, &v0, &cfg(SolverVariant::FullSubspace, target)) {
            Ok(o) => o.trace,
            Err(e) => e.trace().cloned().expect("trace on failure"),
        };
        assert_eq!(out.stagnation_events(), 0);
    }
}

#[test]
fn solves_are_deterministic() {
    let mut rng = seeded_rng(203);
    let a = fixtures::random_matrix(&mut rng, 12, 12);
    let v0 = fixtures::random_vector(&mut rng, 12);
    let c = cfg(SolverVariant::Subspace, C64::new(0.5, 0.0));
    let one = jd_solve(&a, &v0, &c).unwrap();
    let two = jd_solve(&a, &v0, &c).unwrap();
    assert_eq!(one, two);
}

#[test]
fn two_sided_hermitian_sequences_match_one_sided() {
    let mut rng = seeded_rng(204);
    let a = fixtures::random_hermitian(&mut rng, 12);
    let v0 = fixtures::random_vector(&mut rng, 12);
    let target = C64::new(0.3, 0.0);
    let one = jd_solve(&a, &v0, &cfg(SolverVariant::Standard, target)).unwrap();
    for variant in [SolverVariant::Bi, SolverVariant::Orth] {
        let two = jd_solve_two_sided(&a, &v0, &v0, &cfg(variant, target)).unwrap();
        let (x, y) = (one.trace.ritz_values(), two.trace.ritz_values());
        assert_eq!(x.len(), y.len());
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).norm() <= 1e-10);
        }
    }
}
