//! Reference matrices and seeded instance generators shared by tests,
//! benchmarks and the command-line `repro` runner.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{orthonormalize, svd, DenseMatrix, Tolerance, Vector, C64};

/// A small matrix together with a starting search basis and target.
#[derive(Debug, Clone)]
pub struct WorkedExample {
    pub a: DenseMatrix,
    pub basis: DenseMatrix,
    pub target: C64,
}

fn unit_basis(n: usize, k: usize) -> DenseMatrix {
    DenseMatrix::from_columns(&(0..k).map(|i| Vector::unit(n, i)).collect::<Vec<_>>())
}

/// 3×3 matrix whose correction equation at `u = e₁`, `λ = 1` is inconsistent.
pub fn example1() -> WorkedExample {
    let a = DenseMatrix::from_real_rows(&[[1.0, 1.0, 1.0], [1.0, 1.0, 1.0], [0.0, 0.0, 2.0]]).unwrap();
    WorkedExample {
        a,
        basis: unit_basis(3, 1),
        target: C64::new(1.0, 0.0),
    }
}

/// 4×4 matrix with `V = [e₁, e₂]` whose unique correction lies in `span V`.
pub fn example2() -> WorkedExample {
    let a = DenseMatrix::from_real_rows(&[
        [1.0, 1.0, 2.0, 3.0],
        [0.0, 1.0, 2.0, -1.0],
        [0.0, 0.0, -2.0, 2.0],
        [1.0, 1.0 / 3.0, 4.0 / 3.0, 0.0],
    ])
    .unwrap();
    WorkedExample {
        a,
        basis: unit_basis(4, 2),
        target: C64::new(1.0, 0.0),
    }
}

/// 4×4 matrix with a defective projected matrix but a non-trivial expansion.
pub fn example3() -> WorkedExample {
    let a = DenseMatrix::from_real_rows(&[
        [1.0, 1.0, 1.0, 5.0],
        [0.0, 1.0, 2.0, 6.0],
        [1.0, 2.0, 3.0, 7.0],
        [3.0, 4.0, 4.0, 8.0],
    ])
    .unwrap();
    WorkedExample {
        a,
        basis: unit_basis(4, 2),
        target: C64::new(1.0, 0.0),
    }
}

/// Tridiagonal `[-1, 2, -1]` matrix of order `n`.
pub fn laplacian_1d(n: usize) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = C64::new(2.0, 0.0);
        if i + 1 < n {
            m[(i, i + 1)] = C64::new(-1.0, 0.0);
            m[(i + 1, i)] = C64::new(-1.0, 0.0);
        }
    }
    m
}

/// `diag(1, 2, …, n)`.
pub fn diagonal_range(n: usize) -> DenseMatrix {
    DenseMatrix::from_real_diag(&(1..=n).map(|i| i as f64).collect::<Vec<_>>())
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_vector<R: Rng>(rng: &mut R, n: usize) -> Vector {
    Vector::from((0..n).map(|_| random_complex(rng)).collect::<Vec<_>>())
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| random_complex(rng)).collect();
    DenseMatrix::new(rows, cols, data).expect("finite random entries")
}

/// Random Hermitian matrix `(G + Gᴴ)/2`.
pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> DenseMatrix {
    let g = random_matrix(rng, n, n);
    g.add(&g.adjoint()).scale(C64::new(0.5, 0.0))
}

/// Random n×k matrix with orthonormal columns.
pub fn random_orthonormal<R: Rng>(rng: &mut R, n: usize, k: usize) -> DenseMatrix {
    loop {
        let g = random_matrix(rng, n, k);
        if let Ok(o) = orthonormalize(&g, &Tolerance::default()) {
            if o.q.cols() == k {
                return o.q;
            }
        }
    }
}

pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> DenseMatrix {
    random_orthonormal(rng, n, n)
}

/// Shape of a constructed Ritz instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceKind {
    /// The Ritz vector's witness `uᴴ(A−λI)⁻¹u` vanishes (for `w = 1`), or the
    /// subspace witness matrix is singular with an inconsistent system.
    Inconsistent,
    /// Singular subspace witness matrix with a consistent system (`w ≥ 2`).
    Underdetermined,
    /// Unique standard correction lying inside the search subspace.
    Stagnant,
}

/// Exact Ritz data for `A`: `u = V·y` with `VᴴAu = λ·y` and `W ⊆ span V`
/// containing `u`.
#[derive(Debug, Clone)]
pub struct RitzInstance {
    pub a: DenseMatrix,
    pub basis: DenseMatrix,
    pub coeff: Vector,
    pub ritz_value: C64,
    pub ritz_vector: Vector,
    pub residual: Vector,
    pub subspace: DenseMatrix,
}

/// Builds an instance of the requested kind in coordinates where `u = e₁`,
/// `V = [e₁..e_k]`, `W = [e₁..e_w]`, then applies a random unitary similarity
/// and a random rotation of the basis.
///
/// Requires `1 ≤ w ≤ k < n`; `Underdetermined` needs `w ≥ 2` and `n − w ≥ 2`,
/// `Stagnant` needs `k ≥ 2`.
pub fn constructed_instance<R: Rng>(rng: &mut R, n: usize, k: usize, w: usize, kind: InstanceKind) -> RitzInstance {
    assert!(1 <= w && w <= k && k < n, "need 1 <= w <= k < n");
    match kind {
        InstanceKind::Underdetermined => assert!(w >= 2 && n - w >= 2, "need w >= 2 and n - w >= 2"),
        InstanceKind::Stagnant => assert!(k >= 2, "need k >= 2"),
        InstanceKind::Inconsistent => {}
    }
    loop {
        let b = shifted_operator(rng, n, k, w, kind);
        let d = svd(&b).expect("finite");
        if d.sigma_min() < 1e-3 * d.sigma_max() {
            continue;
        }
        let lambda = random_complex(rng);
        let q = random_unitary(rng, n);
        let z = random_unitary(rng, k);
        let zw = random_unitary(rng, w);
        let a = q.matmul(&b.shifted(-lambda)).matmul(&q.adjoint());
        let basis = q.columns(0, k).matmul(&z);
        let coeff = z.adjoint().column(0);
        let ritz_vector = q.column(0);
        let residual = a.mul_vec(&ritz_vector).sub(&ritz_vector.scale(lambda));
        let subspace = q.columns(0, w).matmul(&zw);
        return RitzInstance {
            a,
            basis,
            coeff,
            ritz_value: lambda,
            ritz_vector,
            residual,
            subspace,
        };
    }
}

/// `B = A − λI` in the canonical coordinates of [`constructed_instance`].
fn shifted_operator<R: Rng>(rng: &mut R, n: usize, k: usize, w: usize, kind: InstanceKind) -> DenseMatrix {
    let mut b = random_matrix(rng, n, n);
    for i in 0..k {
        b[(i, 0)] = C64::new(0.0, 0.0);
    }
    match kind {
        InstanceKind::Stagnant => {
            let c0 = random_complex(rng);
            for i in 0..n {
                let e = if i == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                b[(i, 1)] = e - c0 * b[(i, 0)];
            }
        }
        InstanceKind::Inconsistent | InstanceKind::Underdetermined => {
            if kind == InstanceKind::Underdetermined {
                for i in w..n {
                    b[(i, w)] = b[(i, 0)];
                }
            }
            // Make the trailing block B[w.., w..] singular through its last column.
            let m = n - w;
            if m == 1 {
                b[(n - 1, n - 1)] = C64::new(0.0, 0.0);
            } else {
                let coef: Vec<C64> = (0..m - 1).map(|_| random_complex(rng)).collect();
                for i in w..n {
                    let mut acc = C64::new(0.0, 0.0);
                    for (j, c) in coef.iter().enumerate() {
                        acc += c * b[(i, w + j)];
                    }
                    b[(i, n - 1)] = acc;
                }
            }
        }
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_is_exact_ritz_data() {
        let mut rng = seeded_rng(7);
        for kind in [
            InstanceKind::Inconsistent,
            InstanceKind::Underdetermined,
            InstanceKind::Stagnant,
        ] {
            let inst = constructed_instance(&mut rng, 6, 3, 2, kind);
            assert!(inst.basis.orthonormality_defect() < 1e-13);
            let u = inst.basis.mul_vec(&inst.coeff);
            assert!(u.sub(&inst.ritz_vector).norm() < 1e-13);
            assert!(inst.basis.adjoint_mul_vec(&inst.residual).norm() < 1e-12 * inst.a.norm_fro());
            let p = inst.basis.matmul(&inst.basis.adjoint());
            assert!(p.matmul(&inst.subspace).sub(&inst.subspace).norm_fro() < 1e-13);
        }
    }

    #[test]
    fn laplacian_is_tridiagonal() {
        let l = laplacian_1d(4);
        assert_eq!(l[(0, 0)], C64::new(2.0, 0.0));
        assert_eq!(l[(2, 1)], C64::new(-1.0, 0.0));
        assert_eq!(l[(3, 0)], C64::new(0.0, 0.0));
    }
}
