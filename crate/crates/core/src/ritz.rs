//! Rayleigh-Ritz and Petrov-Galerkin extraction, basis rotation and the
//! defectiveness test on projected matrices.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{lu_solve, orthonormalize, small_eig, svd, DenseMatrix, LinalgError, Tolerance, Vector, C64, ONE};

/// Relative orthonormality defect accepted for a search basis, times `n·ε`.
const BASIS_DEFECT_FACTOR: f64 = 100.0;
/// Bound on `‖Vᴴr‖ / ‖A‖` for an accepted Ritz residual.
const RESIDUAL_ORTHOGONALITY: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RitzError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("search basis is not orthonormal (defect {defect:.3e})")]
    NotOrthonormal { defect: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("coefficient vector must have unit norm (norm {norm:.3e})")]
    NotUnitCoefficient { norm: f64 },
    #[error("Ritz residual is not orthogonal to the basis (‖Vᴴr‖ = {defect:.3e})")]
    ResidualNotOrthogonal { defect: f64 },
    #[error("{lambda} is not an eigenvalue: σ_min = {sigma_min:.3e} exceeds {threshold:.3e}")]
    NotAnEigenvalue {
        lambda: C64,
        sigma_min: f64,
        threshold: f64,
    },
    #[error("projected pencil is singular: the left and right bases are numerically orthogonal")]
    SingularPencil,
}

/// Orthonormal basis `V` (n×k) of a search subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBasis {
    v: DenseMatrix,
}

impl SearchBasis {
    /// Wraps `v`, checking `‖VᴴV − I‖_F ≤ 100·n·ε`.
    pub fn new(v: DenseMatrix) -> Result<Self, RitzError> {
        let defect = v.orthonormality_defect();
        if defect > BASIS_DEFECT_FACTOR * v.rows() as f64 * f64::EPSILON || v.cols() == 0 || v.cols() > v.rows() {
            return Err(RitzError::NotOrthonormal { defect });
        }
        Ok(Self { v })
    }

    /// Orthonormalizes arbitrary columns; returns the basis and dropped indices.
    pub fn from_columns(columns: &DenseMatrix, tol: &Tolerance) -> Result<(Self, Vec<usize>), RitzError> {
        let o = orthonormalize(columns, tol)?;
        Ok((Self::new(o.q)?, o.dropped))
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.v
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.v
    }

    /// Ambient dimension `n`.
    pub fn ambient_dim(&self) -> usize {
        self.v.rows()
    }

    /// Subspace dimension `k`.
    pub fn dim(&self) -> usize {
        self.v.cols()
    }

    pub fn orthonormality_defect(&self) -> f64 {
        self.v.orthonormality_defect()
    }

    /// `‖x − VVᴴx‖`.
    pub fn distance(&self, x: &Vector) -> f64 {
        let c = self.v.adjoint_mul_vec(x);
        x.sub(&self.v.mul_vec(&c)).norm()
    }

    /// `VVᴴ`.
    pub fn projector(&self) -> DenseMatrix {
        self.v.matmul(&self.v.adjoint())
    }
}

/// A Ritz pair `(λ̃, u = Vy)` with residual `r = Au − λ̃u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RitzPair {
    pub value: C64,
    pub coeff: Vector,
    pub ritz_vector: Vector,
    pub residual: Vector,
}

impl RitzPair {
    /// Forms `u = Vy` and `r = Au − λu`, with `y` normalized and the phase
    /// fixed so the largest-magnitude entry of `u` is real positive.
    pub fn from_coeff(a: &DenseMatrix, basis: &SearchBasis, value: C64, coeff: &Vector) -> Result<Self, RitzError> {
        if coeff.len() != basis.dim() {
            return Err(RitzError::DimensionMismatch {
                expected: basis.dim(),
                found: coeff.len(),
            });
        }
        let y = coeff.normalized().ok_or(RitzError::NotUnitCoefficient { norm: 0.0 })?;
        let u = basis.matrix().mul_vec(&y);
        let phase = canonical_phase(&u);
        let y = y.scale(phase);
        let u = u.scale(phase);
        let residual = a.mul_vec(&u).sub(&u.scale(value));
        Ok(Self {
            value,
            coeff: y,
            ritz_vector: u,
            residual,
        })
    }

    pub fn residual_norm(&self) -> f64 {
        self.residual.norm()
    }
}

/// Unimodular factor that makes the first entry of largest magnitude real
/// and positive.
pub fn canonical_phase(x: &Vector) -> C64 {
    let max = x.norm_inf();
    if max == 0.0 {
        return ONE;
    }
    let lead = x
        .iter()
        .find(|z| z.norm() >= max * (1.0 - 1e-10))
        .copied()
        .unwrap_or(ONE);
    lead.conj() / lead.norm()
}

/// The projected matrix `T = VᴴAV`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedMatrix {
    t: DenseMatrix,
}

impl ProjectedMatrix {
    pub fn new(a: &DenseMatrix, basis: &SearchBasis) -> Result<Self, RitzError> {
        if a.rows() != basis.ambient_dim() || !a.is_square() {
            return Err(RitzError::DimensionMismatch {
                expected: basis.ambient_dim(),
                found: a.rows(),
            });
        }
        let v = basis.matrix();
        Ok(Self {
            t: v.adjoint_mul(&a.matmul(v)),
        })
    }

    /// Wraps an explicitly given small matrix.
    pub fn from_matrix(t: DenseMatrix) -> Result<Self, RitzError> {
        if !t.is_square() {
            return Err(LinalgError::NotSquare {
                rows: t.rows(),
                cols: t.cols(),
            }
            .into());
        }
        Ok(Self { t })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.t
    }
}

/// Ritz pair whose value is nearest `target`.
pub fn extract_ritz(
    a: &DenseMatrix,
    basis: &SearchBasis,
    target: C64,
) -> Result<(RitzPair, ProjectedMatrix), RitzError> {
    let (mut ranked, t) = ranked_ritz_pairs(a, basis, target)?;
    Ok((ranked.swap_remove(0), t))
}

/// All Ritz pairs, nearest `target` first.
///
/// Values at equal distance are ordered by residual norm, then by the order in
/// which the small eigensolver returned them.
pub fn ranked_ritz_pairs(
    a: &DenseMatrix,
    basis: &SearchBasis,
    target: C64,
) -> Result<(Vec<RitzPair>, ProjectedMatrix), RitzError> {
    let proj = ProjectedMatrix::new(a, basis)?;
    let pairs = small_eig(&proj.t)?;
    let mut candidates = Vec::with_capacity(pairs.len());
    for p in &pairs {
        candidates.push(RitzPair::from_coeff(a, basis, p.value, &p.vector)?);
    }
    let scale = a.norm_fro().max(f64::MIN_POSITIVE);
    for c in &candidates {
        let defect = basis.matrix().adjoint_mul_vec(&c.residual).norm();
        if defect > RESIDUAL_ORTHOGONALITY * scale {
            return Err(RitzError::ResidualNotOrthogonal { defect });
        }
    }
    let tie = 1e-12 * (scale + target.norm());
    let ranked = rank_by(candidates, |c| ((c.value - target).norm(), c.residual_norm()), tie);
    Ok((ranked, proj))
}

/// Orders items by the first key, breaking near-ties (within `tie`) by the
/// second key and then by original position.
pub(crate) fn rank_by<T, F: Fn(&T) -> (f64, f64)>(items: Vec<T>, key: F, tie: f64) -> Vec<T> {
    let keys: Vec<(f64, f64)> = items.iter().map(&key).collect();
    let better = |i: usize, j: usize| {
        let (di, ri) = keys[i];
        let (dj, rj) = keys[j];
        if (di - dj).abs() > tie {
            return di < dj;
        }
        if (ri - rj).abs() > tie {
            return ri < rj;
        }
        i < j
    };
    let mut remaining: Vec<usize> = (0..items.len()).collect();
    let mut order = Vec::with_capacity(items.len());
    while !remaining.is_empty() {
        let mut best = 0;
        for pos in 1..remaining.len() {
            if better(remaining[pos], remaining[best]) {
                best = pos;
            }
        }
        order.push(remaining.remove(best));
    }
    let mut slots: Vec<Option<T>> = items.into_iter().map(Some).collect();
    order
        .into_iter()
        .map(|i| slots[i].take().expect("each index once"))
        .collect()
}

/// Rotates the basis so that its first column is `Vy`.
///
/// Uses a Householder matrix `H` with `Hᴴy ∝ e₁` followed by a diagonal
/// phase correction, so `V̂e₁ = Vy` holds exactly up to rounding.
pub fn rotate_basis_first(basis: &SearchBasis, y: &Vector) -> Result<SearchBasis, RitzError> {
    let k = basis.dim();
    if y.len() != k {
        return Err(RitzError::DimensionMismatch {
            expected: k,
            found: y.len(),
        });
    }
    let norm = y.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(RitzError::NotUnitCoefficient { norm });
    }
    let phase = if y[0].norm() > 0.0 { y[0] / y[0].norm() } else { ONE };
    let beta = -phase * norm;
    let mut w = y.clone();
    w[0] -= beta;
    let wn: f64 = w.iter().map(|z| z.norm_sqr()).sum();
    let mut h = DenseMatrix::identity(k);
    if wn > 0.0 {
        let tau = 2.0 / wn;
        for j in 0..k {
            for i in 0..k {
                h[(i, j)] -= w[i] * w[j].conj() * tau;
            }
        }
    }
    // H e₁ = y / β, so scaling the first column by β gives V̂e₁ = Vy.
    for i in 0..k {
        h[(i, 0)] *= beta;
    }
    SearchBasis::new(basis.matrix().matmul(&h))
}

/// Nullities of `T − λI` and `(T − λI)²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Defectiveness {
    pub defective: bool,
    pub nullity1: usize,
    pub nullity2: usize,
}

/// Decides whether `λ` is a defective eigenvalue of `T`.
///
/// Singular values of `T − λI` at or below `cluster_tol · max(σ_max(T), |λ|)`
/// count as zero. The second nullity is computed as the nullity of
/// `(I − N₁N₁ᴴ)(T − λI)`, where `N₁` spans the numerical null space of
/// `T − λI`; this equals `dim N((T − λI)²)` without squaring the threshold.
pub fn is_defective(t: &DenseMatrix, lambda: C64, tol: &Tolerance) -> Result<Defectiveness, RitzError> {
    if !t.is_square() {
        return Err(LinalgError::NotSquare {
            rows: t.rows(),
            cols: t.cols(),
        }
        .into());
    }
    let k = t.rows();
    let mut scale = svd(t)?.sigma_max().max(lambda.norm());
    if scale == 0.0 {
        scale = 1.0;
    }
    let threshold = tol.cluster_tol * scale;
    let m = t.shifted(lambda);
    let d = svd(&m)?;
    if d.sigma_min() > threshold {
        return Err(RitzError::NotAnEigenvalue {
            lambda,
            sigma_min: d.sigma_min(),
            threshold,
        });
    }
    let nullity1 = k - d.rank(threshold);
    let n1 = d.v.columns(k - nullity1, k);
    let proj = DenseMatrix::identity(k).sub(&n1.matmul(&n1.adjoint()));
    let nullity2 = k - svd(&proj.matmul(&m))?.rank(threshold);
    Ok(Defectiveness {
        defective: nullity2 > nullity1,
        nullity1,
        nullity2,
    })
}

/// A Petrov-Galerkin triple: right vector `q = Qy`, left vector `p = Pz`,
/// value `θ = pᴴAq / pᴴq` and both residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PetrovTriple {
    pub theta: C64,
    pub right_coeff: Vector,
    pub left_coeff: Vector,
    /// Unit-norm right approximation.
    pub q: Vector,
    /// Unit-norm left approximation.
    pub p: Vector,
    /// `(A − θI)q`.
    pub right_residual: Vector,
    /// `(Aᴴ − θ̄I)p`.
    pub left_residual: Vector,
}

/// Right and left projected matrices of the pencil `(PᴴAQ, PᴴQ)`:
/// `T_right = (PᴴQ)⁻¹PᴴAQ` and `T_left = (QᴴP)⁻¹QᴴAᴴP`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedPencil {
    pub right: DenseMatrix,
    pub left: DenseMatrix,
}

/// Two-sided extraction: `θ` is the eigenvalue of `T_right` nearest `target`;
/// the left coefficient spans the left null space of `PᴴAQ − θPᴴQ`.
pub fn extract_two_sided(
    a: &DenseMatrix,
    q_basis: &DenseMatrix,
    p_basis: &DenseMatrix,
    target: C64,
    tol: &Tolerance,
) -> Result<(PetrovTriple, ProjectedPencil), RitzError> {
    let n = a.rows();
    for b in [q_basis, p_basis] {
        if b.rows() != n {
            return Err(RitzError::DimensionMismatch {
                expected: n,
                found: b.rows(),
            });
        }
    }
    if q_basis.cols() != p_basis.cols() {
        return Err(RitzError::DimensionMismatch {
            expected: q_basis.cols(),
            found: p_basis.cols(),
        });
    }
    let g = p_basis.adjoint_mul(q_basis);
    let paq = p_basis.adjoint_mul(&a.matmul(q_basis));
    let right = lu_solve(&g, &paq, tol).map_err(|_| RitzError::SingularPencil)?;
    let left = lu_solve(&g.adjoint(), &paq.adjoint(), tol).map_err(|_| RitzError::SingularPencil)?;

    let pairs = small_eig(&right)?;
    let tie = 1e-12 * (right.norm_fro() + target.norm()).max(f64::MIN_POSITIVE);
    let ranked = rank_by(pairs, |p| ((p.value - target).norm(), 0.0), tie);
    let best = &ranked[0];
    let y = best.vector.clone();
    let pencil = paq.sub(&g.scale(best.value));
    let ds = svd(&pencil.adjoint())?;
    let z = ds.v.column(ds.v.cols() - 1);

    let q = q_basis.mul_vec(&y);
    let p = p_basis.mul_vec(&z);
    let (qn, pn) = (q.norm(), p.norm());
    if qn == 0.0 || pn == 0.0 {
        return Err(RitzError::SingularPencil);
    }
    let phase_q = canonical_phase(&q) / qn;
    let phase_p = canonical_phase(&p) / pn;
    let q = q.scale(phase_q);
    let p = p.scale(phase_p);
    let pq = p.dot(&q);
    if pq.norm() == 0.0 {
        return Err(RitzError::SingularPencil);
    }
    let theta = p.dot(&a.mul_vec(&q)) / pq;
    let right_residual = a.mul_vec(&q).sub(&q.scale(theta));
    let left_residual = a.adjoint_mul_vec(&p).sub(&p.scale(theta.conj()));
    Ok((
        PetrovTriple {
            theta,
            right_coeff: y.scale(phase_q),
            left_coeff: z.scale(phase_p),
            q,
            p,
            right_residual,
            left_residual,
        },
        ProjectedPencil { right, left },
    ))
}

impl PetrovTriple {
    pub fn right_residual_norm(&self) -> f64 {
        self.right_residual.norm()
    }

    pub fn left_residual_norm(&self) -> f64 {
        self.left_residual.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn basis(ex: &fixtures::WorkedExample) -> SearchBasis {
        SearchBasis::new(ex.basis.clone()).unwrap()
    }

    #[test]
    fn first_example_ritz_pair() {
        let ex = fixtures::example1();
        let (pair, _) = extract_ritz(&ex.a, &basis(&ex), C64::new(7.0, 0.0)).unwrap();
        assert_eq!(pair.value, ONE);
        assert_eq!(pair.ritz_vector, Vector::unit(3, 0));
        assert_eq!(pair.residual, Vector::unit(3, 1));
    }

    #[test]
    fn second_example_ritz_pair() {
        let ex = fixtures::example2();
        let (pair, t) = extract_ritz(&ex.a, &basis(&ex), ex.target).unwrap();
        assert!((pair.value - ONE).norm() < 1e-15);
        assert!(pair.ritz_vector.sub(&Vector::unit(4, 0)).norm() < 1e-15);
        assert!(pair.residual.sub(&Vector::unit(4, 3)).norm() < 1e-15);
        let expected = DenseMatrix::from_real_rows(&[[1.0, 1.0], [0.0, 1.0]]).unwrap();
        assert_eq!(t.matrix(), &expected);
    }

    #[test]
    fn exact_eigenpair_has_zero_residual() {
        let a = fixtures::diagonal_range(5);
        let b = SearchBasis::new(DenseMatrix::from_column(&Vector::unit(5, 2))).unwrap();
        let (pair, _) = extract_ritz(&a, &b, C64::new(3.0, 0.0)).unwrap();
        assert_eq!(pair.value, C64::new(3.0, 0.0));
        assert_eq!(pair.residual_norm(), 0.0);
    }

    #[test]
    fn ranking_prefers_smaller_residual_on_ties() {
        let items = vec![(1.0, 0.5), (1.0, 0.1), (0.5, 9.0), (1.0, 0.1)];
        let ranked = rank_by(items, |&x| x, 1e-12);
        assert_eq!(ranked, vec![(0.5, 9.0), (1.0, 0.1), (1.0, 0.1), (1.0, 0.5)]);
    }

    #[test]
    fn rotation_keeps_identity_for_e1() {
        let v = DenseMatrix::from_columns(&[Vector::unit(3, 0), Vector::unit(3, 1)]);
        let b = SearchBasis::new(v.clone()).unwrap();
        let r = rotate_basis_first(&b, &Vector::unit(2, 0)).unwrap();
        assert!(r.matrix().sub(&v).norm_fro() < 1e-15);
    }

    #[test]
    fn rotation_permutes_for_e2() {
        let v = DenseMatrix::from_columns(&[Vector::unit(3, 0), Vector::unit(3, 1)]);
        let b = SearchBasis::new(v).unwrap();
        let r = rotate_basis_first(&b, &Vector::unit(2, 1)).unwrap();
        assert!(r.matrix().column(0).sub(&Vector::unit(3, 1)).norm() < 1e-15);
        assert!(r.projector().sub(&b.projector()).norm_fro() < 1e-15);
    }

    #[test]
    fn defectiveness_cases() {
        let tol = Tolerance::default();
        let jordan = DenseMatrix::from_real_rows(&[[1.0, 1.0], [0.0, 1.0]]).unwrap();
        let d = is_defective(&jordan, ONE, &tol).unwrap();
        assert_eq!((d.defective, d.nullity1, d.nullity2), (true, 1, 2));

        let semi = DenseMatrix::identity(2);
        let d = is_defective(&semi, ONE, &tol).unwrap();
        assert_eq!((d.defective, d.nullity1, d.nullity2), (false, 2, 2));

        let j3 = DenseMatrix::from_real_rows(&[[2.0, 1.0, 0.0], [0.0, 2.0, 1.0], [0.0, 0.0, 2.0]]).unwrap();
        let d = is_defective(&j3, C64::new(2.0, 0.0), &tol).unwrap();
        assert_eq!((d.defective, d.nullity1, d.nullity2), (true, 1, 2));

        assert!(matches!(
            is_defective(&jordan, C64::new(3.0, 0.0), &tol),
            Err(RitzError::NotAnEigenvalue { .. })
        ));
    }

    #[test]
    fn two_sided_extraction_on_hermitian_matches_one_sided() {
        let mut rng = fixtures::seeded_rng(3);
        let a = fixtures::random_hermitian(&mut rng, 6);
        let v = fixtures::random_orthonormal(&mut rng, 6, 3);
        let target = C64::new(0.3, 0.0);
        let (pair, _) = extract_ritz(&a, &SearchBasis::new(v.clone()).unwrap(), target).unwrap();
        let (triple, _) = extract_two_sided(&a, &v, &v, target, &Tolerance::default()).unwrap();
        assert!((pair.value - triple.theta).norm() < 1e-12);
        assert!(triple.q.sub(&pair.ritz_vector).norm() < 1e-10);
        assert!(triple.p.sub(&pair.ritz_vector).norm() < 1e-10);
    }
}
