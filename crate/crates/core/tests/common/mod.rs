//! Independent oracles shared by the integration and acceptance tests.
//!
//! Nothing here calls the library's own linear algebra: floating-point
//! decisions go through nalgebra, exact ones through big rationals.

#![allow(dead_code)]

use jd_diag::fixtures::{self, InstanceKind};
use jd_diag::linalg::orthonormalize;
use jd_diag::ritz::{extract_ritz, RitzPair, SearchBasis};
use jd_diag::{DenseMatrix, Tolerance, Vector, C64};
use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type NMat = DMatrix<C64>;

pub fn to_na(m: &DenseMatrix) -> NMat {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

pub fn vec_to_na(v: &Vector) -> DVector<C64> {
    DVector::from_iterator(v.len(), v.iter().copied())
}

pub fn from_na_vec(v: &DVector<C64>) -> Vector {
    Vector::from(v.iter().copied().collect::<Vec<_>>())
}

/// Singular values (descending) and the matching left singular vectors of
/// an m×k matrix with m ≥ k, read off the Hermitian eigendecomposition of
/// `[[0, C], [Cᴴ, 0]]` whose eigenvalues are `±σᵢ`.
fn na_svd(c: &NMat) -> (Vec<f64>, NMat) {
    let (m, k) = (c.nrows(), c.ncols());
    let mut h = NMat::zeros(m + k, m + k);
    h.view_mut((0, m), (m, k)).copy_from(c);
    h.view_mut((m, 0), (k, m)).copy_from(&c.adjoint());
    let e = h.symmetric_eigen();
    let mut idx: Vec<usize> = (0..m + k).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
    idx.truncate(k);
    let s = idx.iter().map(|&i| e.eigenvalues[i].max(0.0)).collect();
    let u = NMat::from_fn(m, k, |r, j| e.eigenvectors[(r, idx[j])] * std::f64::consts::SQRT_2);
    (s, u)
}

/// Orthonormal basis of the complement of `span W`: eigenvectors of the
/// projector `I − WWᴴ` for eigenvalue one.
pub fn complement(w: &NMat) -> NMat {
    let n = w.nrows();
    let p = NMat::identity(n, n) - w * w.adjoint();
    let e = p.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
    NMat::from_fn(n, n - w.ncols(), |r, j| e.eigenvectors[(r, idx[j])])
}

/// Solvability decided on the complement system `[W⊥ᴴ(A − λI)W⊥]x = −W⊥ᴴr`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Unique,
    None,
    Infinite,
}

/// Singular-value cutoff relative to `‖A − λI‖_F` for the brute-force rank decision.
pub const BRUTE_RANK: f64 = 1e-9;
/// Relative least-squares residual below which the system is consistent.
pub const BRUTE_CONSISTENT: f64 = 1e-8;

pub fn brute_force(a: &DenseMatrix, lambda: C64, w: &DenseMatrix, r: &Vector) -> Decision {
    let n = a.rows();
    let wp = complement(&to_na(w));
    let b = to_na(a) - NMat::identity(n, n) * lambda;
    let c = wp.adjoint() * &b * &wp;
    let rhs = -(wp.adjoint() * vec_to_na(r));
    let (s, u) = na_svd(&c);
    let scale = b.norm();
    let rank = s.iter().filter(|&&x| x > BRUTE_RANK * scale).count();
    if rank == c.ncols() {
        return Decision::Unique;
    }
    let ur = u.columns(0, rank);
    let resid = (&rhs - ur * (ur.adjoint() * &rhs)).norm();
    if resid <= BRUTE_CONSISTENT * rhs.norm() {
        Decision::Infinite
    } else {
        Decision::None
    }
}

/// Eigenvalues from nalgebra's complex Schur form.
pub fn eigenvalues(m: &DenseMatrix) -> Vec<C64> {
    let (_, t) = to_na(m).schur().unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// `‖x − WWᴴx‖ / ‖x‖` computed in nalgebra for an orthonormal `W`.
pub fn span_distance(w: &DenseMatrix, x: &Vector) -> f64 {
    let w = to_na(w);
    let x = vec_to_na(x);
    (&x - &w * (w.adjoint() * &x)).norm() / x.norm()
}

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    BigRational::from_integer(BigInt::from(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn q_matrix<R: AsRef<[i64]>>(rows: &[R]) -> Vec<Vec<Q>> {
    rows.iter()
        .map(|r| r.as_ref().iter().map(|&x| q(x)).collect())
        .collect()
}

pub fn q_to_f64(x: &Q) -> f64 {
    let n: f64 = x.numer().to_string().parse().expect("integer");
    let d: f64 = x.denom().to_string().parse().expect("integer");
    n / d
}

/// Exact rank by fraction-free Gaussian elimination over the rationals.
pub fn exact_rank(m: &[Vec<Q>]) -> usize {
    let mut m: Vec<Vec<Q>> = m.to_vec();
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let pivot_row = m[rank].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != rank && !row[c].is_zero() {
                let f = &row[c] / &pivot_row[c];
                for (x, y) in row[c..].iter_mut().zip(&pivot_row[c..]) {
                    *x -= &f * y;
                }
            }
        }
        rank += 1;
    }
    rank
}

pub fn q_mul(a: &[Vec<Q>], b: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..k).fold(Q::zero(), |acc, l| acc + &a[i][l] * &b[l][j]))
                .collect()
        })
        .collect()
}

pub fn q_shift(m: &[Vec<Q>], lambda: &Q) -> Vec<Vec<Q>> {
    let mut out = m.to_vec();
    for (i, row) in out.iter_mut().enumerate() {
        row[i] -= lambda;
    }
    out
}

/// Exact inverse by Gauss-Jordan elimination; `None` if singular.
pub fn q_inverse(m: &[Vec<Q>]) -> Option<Vec<Vec<Q>>> {
    let n = m.len();
    let mut aug: Vec<Vec<Q>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&i| !aug[i][c].is_zero())?;
        aug.swap(c, p);
        let piv = aug[c][c].clone();
        for x in aug[c].iter_mut() {
            *x = &*x / &piv;
        }
        let pivot_row = aug[c].clone();
        for (i, row) in aug.iter_mut().enumerate() {
            if i != c && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x -= &f * y;
                }
            }
        }
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Nullities of `T − λI` and `(T − λI)²` over the rationals.
pub fn exact_nullities(t: &[Vec<Q>], lambda: &Q) -> (usize, usize) {
    let k = t.len();
    let m = q_shift(t, lambda);
    let m2 = q_mul(&m, &m);
    (k - exact_rank(&m), k - exact_rank(&m2))
}

/// A random Ritz instance: complex Gaussian `A`, orthonormal `V` (n×k), the
/// Ritz pair nearest a random target, and an orthonormal `W` with
/// `u ∈ span W ⊆ span V`.
pub struct SweepCase {
    pub a: DenseMatrix,
    pub basis: SearchBasis,
    pub pair: RitzPair,
    pub w: DenseMatrix,
}

pub fn random_case(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Option<SweepCase> {
    let a = fixtures::random_matrix(rng, n, n);
    let basis = SearchBasis::new(fixtures::random_orthonormal(rng, n, k)).ok()?;
    let target = fixtures::random_complex(rng);
    let (pair, _) = extract_ritz(&a, &basis, target).ok()?;
    let wdim = rng.random_range(1..=k);
    let mut cols = vec![pair.ritz_vector.clone()];
    for _ in 1..wdim {
        let c = fixtures::random_vector(rng, k);
        cols.push(basis.matrix().mul_vec(&c));
    }
    let w = orthonormalize(&DenseMatrix::from_columns(&cols), &Tolerance::default())
        .ok()?
        .q;
    Some(SweepCase { a, basis, pair, w })
}

/// A constructed instance: exact Ritz data with a vanishing witness, a
/// singular subspace witness, or a stagnating standard correction.
pub struct ConstructedCase {
    pub kind: InstanceKind,
    pub a: DenseMatrix,
    pub basis: SearchBasis,
    pub value: C64,
    pub u: Vector,
    pub r: Vector,
    pub w: DenseMatrix,
}

pub fn constructed_case(rng: &mut ChaCha8Rng, kind: InstanceKind) -> ConstructedCase {
    let n = rng.random_range(4..=8);
    let (k, w) = match kind {
        InstanceKind::Inconsistent => {
            let k = rng.random_range(1..n);
            (k, rng.random_range(1..=k))
        }
        InstanceKind::Underdetermined => {
            let w = rng.random_range(2..=n - 2);
            (rng.random_range(w..n), w)
        }
        InstanceKind::Stagnant => {
            let k = rng.random_range(2..n);
            (k, 1)
        }
    };
    let inst = fixtures::constructed_instance(rng, n, k, w, kind);
    ConstructedCase {
        kind,
        basis: SearchBasis::new(inst.basis).expect("orthonormal basis"),
        a: inst.a,
        value: inst.ritz_value,
        u: inst.ritz_vector,
        r: inst.residual,
        w: inst.subspace,
    }
}
