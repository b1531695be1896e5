use super::{DenseMatrix, LinalgError, Tolerance, Vector, C64, ZERO};

/// LU factorization with partial pivoting, `P·M = L·U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl Lu {
    /// Factors `m`. A pivot whose magnitude is at or below
    /// `relative_rank · max|mᵢⱼ|` raises `SingularMatrix`.
    pub fn factor(m: &DenseMatrix, tol: &Tolerance) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        let n = m.rows();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let threshold = tol.relative_rank(n) * m.max_abs();

        for k in 0..n {
            let (p, pmag) =
                (k..n)
                    .map(|i| (i, lu[(i, k)].norm()))
                    .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmag <= threshold || pmag == 0.0 {
                return Err(LinalgError::SingularMatrix { column: k, pivot: pmag });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                lu[(i, k)] /= pivot;
            }
            for j in k + 1..n {
                let ukj = lu[(k, j)];
                if ukj == ZERO {
                    continue;
                }
                for i in k + 1..n {
                    let lik = lu[(i, k)];
                    lu[(i, j)] -= lik * ukj;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    #[allow(clippy::needless_range_loop)]
    pub fn solve_vec(&self, b: &Vector) -> Vector {
        let n = self.dim();
        assert_eq!(b.len(), n, "right-hand side length mismatch");
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for j in 0..n {
            let xj = x[j];
            if xj == ZERO {
                continue;
            }
            for i in j + 1..n {
                x[i] -= self.lu[(i, j)] * xj;
            }
        }
        for j in (0..n).rev() {
            x[j] /= self.lu[(j, j)];
            let xj = x[j];
            for i in 0..j {
                x[i] -= self.lu[(i, j)] * xj;
            }
        }
        Vector::from(x)
    }

    pub fn solve(&self, b: &DenseMatrix) -> DenseMatrix {
        let cols: Vec<Vector> = (0..b.cols()).map(|j| self.solve_vec(&b.column(j))).collect();
        let mut out = DenseMatrix::zeros(self.dim(), b.cols());
        for (j, c) in cols.iter().enumerate() {
            out.set_column(j, c);
        }
        out
    }

    pub fn inverse(&self) -> DenseMatrix {
        self.solve(&DenseMatrix::identity(self.dim()))
    }
}

/// Solves `M X = B` by LU with partial pivoting.
pub fn lu_solve(m: &DenseMatrix, b: &DenseMatrix, tol: &Tolerance) -> Result<DenseMatrix, LinalgError> {
    if b.rows() != m.rows() {
        return Err(LinalgError::DimensionMismatch {
            expected: m.rows(),
            found: b.rows(),
        });
    }
    Ok(Lu::factor(m, tol)?.solve(b))
}

/// Solves `M x = b` by LU with partial pivoting.
pub fn lu_solve_vec(m: &DenseMatrix, b: &Vector, tol: &Tolerance) -> Result<Vector, LinalgError> {
    if b.len() != m.rows() {
        return Err(LinalgError::DimensionMismatch {
            expected: m.rows(),
            found: b.len(),
        });
    }
    Ok(Lu::factor(m, tol)?.solve_vec(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn close(a: &Vector, b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, &y)| (x - C64::new(y, 0.0)).norm() <= tol)
    }

    #[test]
    fn identity_solve() {
        let b = Vector::from_real(&[1.0, 2.0, 3.0]).unwrap();
        let x = lu_solve_vec(&DenseMatrix::identity(3), &b, &Tolerance::default()).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn shifted_first_example_maps_e1_to_e2() {
        // (A − I) x = e₁ for the 3×3 inconsistent-correction example: rows give
        // x₃ = 0, x₁ + x₃ = 0, x₂ + x₃ = 1.
        let ex = fixtures::example1();
        let m = ex.a.shifted(C64::new(1.0, 0.0));
        let x = lu_solve_vec(&m, &Vector::unit(3, 0), &Tolerance::default()).unwrap();
        assert!(close(&x, &[0.0, 1.0, 0.0], 1e-15));
        let back = m.mul_vec(&x);
        assert!(back.sub(&Vector::unit(3, 0)).norm() <= 1e-15);
    }

    #[test]
    fn third_example_projected_operator() {
        let m = DenseMatrix::from_real_rows(&[[0.0, 2.0, 6.0], [2.0, 2.0, 7.0], [4.0, 4.0, 7.0]]).unwrap();
        let b = Vector::from_real(&[0.0, -1.0, -3.0]).unwrap();
        let x = lu_solve_vec(&m, &b, &Tolerance::default()).unwrap();
        assert!(close(&x, &[-4.0 / 7.0, -3.0 / 7.0, 1.0 / 7.0], 1e-15));
    }

    #[test]
    fn singular_matrix_is_reported() {
        let m = DenseMatrix::from_real_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        let err = lu_solve_vec(&m, &Vector::ones(2), &Tolerance::default()).unwrap_err();
        assert!(matches!(err, LinalgError::SingularMatrix { column: 1, .. }));
    }

    #[test]
    fn shape_errors() {
        let m = DenseMatrix::zeros(2, 3);
        assert!(matches!(
            Lu::factor(&m, &Tolerance::default()),
            Err(LinalgError::NotSquare { .. })
        ));
        let sq = DenseMatrix::identity(2);
        assert!(lu_solve_vec(&sq, &Vector::ones(3), &Tolerance::default()).is_err());
    }
}
