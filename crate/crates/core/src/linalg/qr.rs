use super::{cdot, DenseMatrix, LinalgError, Tolerance, C64, ZERO};

/// Result of [`orthonormalize`]: the orthonormal basis and the indices of the
/// input columns that were dropped as dependent.
#[derive(Debug, Clone)]
pub struct Orthonormalized {
    pub q: DenseMatrix,
    pub dropped: Vec<usize>,
}

/// Orthonormalizes the columns left to right with two passes of modified
/// Gram-Schmidt. A column whose norm after projection falls below
/// `relative_rank · ‖original column‖` is dropped.
pub fn orthonormalize(columns: &DenseMatrix, tol: &Tolerance) -> Result<Orthonormalized, LinalgError> {
    let n = columns.rows();
    let rel = tol.relative_rank(n.max(columns.cols()));
    let mut q = DenseMatrix::zeros(n, 0);
    let mut dropped = Vec::new();
    for j in 0..columns.cols() {
        let mut v = columns.column(j);
        let orig = v.norm();
        for _ in 0..2 {
            for i in 0..q.cols() {
                let c = cdot(q.col(i), v.as_slice());
                for (x, &qi) in v.as_mut_slice().iter_mut().zip(q.col(i)) {
                    *x -= c * qi;
                }
            }
        }
        let nv = v.norm();
        if orig == 0.0 || nv <= rel * orig {
            dropped.push(j);
            continue;
        }
        q.push_column(&v.scale_real(1.0 / nv));
    }
    if q.cols() == 0 {
        return Err(LinalgError::EmptySpan);
    }
    Ok(Orthonormalized { q, dropped })
}

/// A Householder reflector `H = I − τ w wᴴ` with `H x = β e₁`.
struct Reflector {
    w: Vec<C64>,
    tau: f64,
    beta: C64,
}

fn reflector(x: &[C64]) -> Reflector {
    let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut w = x.to_vec();
    if norm == 0.0 {
        return Reflector {
            w,
            tau: 0.0,
            beta: ZERO,
        };
    }
    let phase = if x[0].norm() > 0.0 {
        x[0] / x[0].norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let beta = -phase * norm;
    w[0] -= beta;
    let wn = w.iter().map(|z| z.norm_sqr()).sum::<f64>();
    Reflector { w, tau: 2.0 / wn, beta }
}

/// Applies `H = I − τ w wᴴ` (acting on rows `offset..`) to column `col`.
fn apply_reflector(r: &Reflector, offset: usize, col: &mut [C64]) {
    if r.tau == 0.0 {
        return;
    }
    let seg = &mut col[offset..];
    let c = cdot(&r.w, seg) * r.tau;
    for (x, &wi) in seg.iter_mut().zip(&r.w) {
        *x -= c * wi;
    }
}

/// Householder QR of a tall matrix, returning the reflectors.
fn householder_reflectors(u: &DenseMatrix) -> Vec<Reflector> {
    let (n, k) = (u.rows(), u.cols());
    let mut work = u.clone();
    let mut refl = Vec::with_capacity(k);
    for j in 0..k.min(n) {
        let r = reflector(&work.col(j)[j..]);
        for c in j..k {
            apply_reflector(&r, j, work.col_mut(c));
        }
        debug_assert!((work[(j, j)] - r.beta).norm() <= 1e-8 * (1.0 + r.beta.norm()));
        refl.push(r);
    }
    refl
}

/// Completes an orthonormal `U` (n×k) to a unitary `[U, U⊥]` and returns `U⊥`.
///
/// The completion comes from the Householder QR of `U`; when `U` consists of
/// leading standard basis vectors the complement is the trailing ones.
pub fn orthonormal_complement(u: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    let (n, k) = (u.rows(), u.cols());
    if k > n {
        return Err(LinalgError::DimensionMismatch { expected: n, found: k });
    }
    let defect = u.orthonormality_defect();
    if defect > 100.0 * n as f64 * f64::EPSILON {
        return Err(LinalgError::NotOrthonormal { defect });
    }
    let refl = householder_reflectors(u);
    let mut out = DenseMatrix::zeros(n, n - k);
    for j in 0..n - k {
        let col = out.col_mut(j);
        col[k + j] = C64::new(1.0, 0.0);
        for (i, r) in refl.iter().enumerate().rev() {
            apply_reflector(r, i, col);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Vector;

    #[test]
    fn orthonormal_input_is_unchanged() {
        let m = DenseMatrix::from_columns(&[Vector::unit(4, 0), Vector::unit(4, 1)]);
        let out = orthonormalize(&m, &Tolerance::default()).unwrap();
        assert_eq!(out.q, m);
        assert!(out.dropped.is_empty());
    }

    #[test]
    fn dependent_column_is_dropped() {
        let e1 = Vector::unit(3, 0);
        let m = DenseMatrix::from_columns(&[e1.clone(), e1.scale_real(2.0)]);
        let out = orthonormalize(&m, &Tolerance::default()).unwrap();
        assert_eq!(out.q, DenseMatrix::from_column(&e1));
        assert_eq!(out.dropped, vec![1]);
    }

    #[test]
    fn all_zero_columns_is_empty_span() {
        let m = DenseMatrix::zeros(3, 2);
        assert!(matches!(
            orthonormalize(&m, &Tolerance::default()),
            Err(LinalgError::EmptySpan)
        ));
    }

    #[test]
    fn complement_of_leading_unit_vectors_is_trailing_unit_vectors() {
        let u = DenseMatrix::from_column(&Vector::unit(4, 0));
        let c = orthonormal_complement(&u).unwrap();
        let expected = DenseMatrix::from_columns(&[Vector::unit(4, 1), Vector::unit(4, 2), Vector::unit(4, 3)]);
        assert_eq!(c, expected);

        let v2 = DenseMatrix::from_columns(&[Vector::unit(4, 0), Vector::unit(4, 1)]);
        let c2 = orthonormal_complement(&v2).unwrap();
        assert_eq!(c2, DenseMatrix::from_columns(&[Vector::unit(4, 2), Vector::unit(4, 3)]));
    }

    #[test]
    fn complement_with_zero_leading_entry() {
        let u = DenseMatrix::from_column(&Vector::unit(3, 1));
        let c = orthonormal_complement(&u).unwrap();
        let full = u.hcat(&c);
        assert!(full.orthonormality_defect() < 1e-15);
    }

    #[test]
    fn complement_rejects_non_orthonormal() {
        let u = DenseMatrix::from_column(&Vector::ones(3));
        assert!(matches!(
            orthonormal_complement(&u),
            Err(LinalgError::NotOrthonormal { .. })
        ));
    }
}
