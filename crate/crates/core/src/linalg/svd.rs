use super::{cdot, DenseMatrix, LinalgError, Tolerance, Vector, C64};

const MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition `M = U Σ Vᴴ` of an m×n matrix.
///
/// `v` is n×n unitary, `singular_values` has length n in descending order and
/// `u` is m×n; columns of `u` that belong to a zero singular value are zero.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub v: DenseMatrix,
}

/// Numerical rank and an orthonormal null-space basis.
#[derive(Debug, Clone)]
pub struct RankInfo {
    pub rank: usize,
    pub nullity: usize,
    /// Orthonormal basis of the null space; `None` when the nullity is zero.
    pub basis: Option<DenseMatrix>,
    pub singular_values: Vec<f64>,
    /// Absolute cutoff that separated the retained singular values.
    pub threshold: f64,
}

/// Outcome of a least-squares range-membership test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeCheck {
    pub in_range: bool,
    /// `min_x ‖Mx − b‖`.
    pub residual: f64,
    /// `residual / ‖b‖`, or 0 when `b = 0`.
    pub relative: f64,
}

/// One-sided Jacobi SVD.
pub fn svd(m: &DenseMatrix) -> Result<Svd, LinalgError> {
    let (rows, cols) = (m.rows(), m.cols());
    if cols == 0 {
        return Err(LinalgError::EmptyMatrix);
    }
    if !m.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let padded = rows.max(cols);
    let mut w = DenseMatrix::zeros(padded, cols);
    for j in 0..cols {
        w.col_mut(j)[..rows].copy_from_slice(m.col(j));
    }
    let mut v = DenseMatrix::identity(cols);
    let floor = (f64::EPSILON * m.norm_fro()).powi(2);

    let mut converged = cols < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..cols - 1 {
            for q in p + 1..cols {
                let alpha: f64 = w.col(p).iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = w.col(q).iter().map(|z| z.norm_sqr()).sum();
                let gamma = cdot(w.col(p), w.col(q));
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() || alpha.min(beta) <= floor {
                    continue;
                }
                rotated = true;
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, phase, c, s);
                rotate(&mut v, p, q, phase, c, s);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(LinalgError::NoConvergence {
            what: "Jacobi SVD",
            iterations: MAX_SWEEPS,
        });
    }

    let mut order: Vec<(usize, f64)> = (0..cols)
        .map(|j| (j, w.col(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()))
        .collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut u = DenseMatrix::zeros(rows, cols);
    let mut vs = DenseMatrix::zeros(cols, cols);
    let mut singular_values = Vec::with_capacity(cols);
    for (dst, &(src, sigma)) in order.iter().enumerate() {
        singular_values.push(sigma);
        vs.col_mut(dst).copy_from_slice(v.col(src));
        if sigma > 0.0 {
            for (o, x) in u.col_mut(dst).iter_mut().zip(&w.col(src)[..rows]) {
                *o = *x / sigma;
            }
        }
    }
    Ok(Svd {
        u,
        singular_values,
        v: vs,
    })
}

/// Applies `p' = c·p − s·e^{-iφ}q`, `q' = s·p + c·e^{-iφ}q` to two columns.
fn rotate(m: &mut DenseMatrix, p: usize, q: usize, phase: C64, c: f64, s: f64) {
    for i in 0..m.rows() {
        let x = m[(i, p)];
        let y = m[(i, q)] * phase;
        m[(i, p)] = x * c - y * s;
        m[(i, q)] = x * s + y * c;
    }
}

impl Svd {
    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    pub fn sigma_min(&self) -> f64 {
        self.singular_values.last().copied().unwrap_or(0.0)
    }

    /// Number of singular values strictly above `threshold`.
    pub fn rank(&self, threshold: f64) -> usize {
        self.singular_values.iter().filter(|&&s| s > threshold).count()
    }

    /// Minimum-norm least-squares solution, treating singular values at or
    /// below `threshold` as zero.
    pub fn solve_min_norm(&self, b: &Vector, threshold: f64) -> Vector {
        let r = self.rank(threshold);
        let mut x = Vector::zeros(self.v.rows());
        for j in 0..r {
            let coef = cdot(self.u.col(j), b.as_slice()) / self.singular_values[j];
            for (xi, &vi) in x.as_mut_slice().iter_mut().zip(self.v.col(j)) {
                *xi += coef * vi;
            }
        }
        x
    }

    /// Residual of the orthogonal projection of `b` onto the leading `rank`
    /// left singular vectors.
    pub fn range_residual(&self, b: &Vector, rank: usize) -> f64 {
        let mut res = b.clone();
        for j in 0..rank {
            let c = cdot(self.u.col(j), b.as_slice());
            for (x, &ui) in res.as_mut_slice().iter_mut().zip(self.u.col(j)) {
                *x -= c * ui;
            }
        }
        res.norm()
    }
}

/// Numerical rank of `m`: singular values above `relative_rank · σ_max` count.
pub fn rank_and_nullspace(m: &DenseMatrix, tol: &Tolerance) -> Result<RankInfo, LinalgError> {
    let d = svd(m)?;
    let threshold = tol.rank_threshold(m.rows().max(m.cols()), d.sigma_max());
    let rank = if d.sigma_max() == 0.0 { 0 } else { d.rank(threshold) };
    let nullity = m.cols() - rank;
    let basis = (nullity > 0).then(|| d.v.columns(rank, m.cols()));
    Ok(RankInfo {
        rank,
        nullity,
        basis,
        singular_values: d.singular_values,
        threshold,
    })
}

/// Tests `b ∈ range(M)`: true iff `min_x ‖Mx − b‖ ≤ membership_tol · ‖b‖`.
pub fn in_range(m: &DenseMatrix, b: &Vector, tol: &Tolerance) -> Result<RangeCheck, LinalgError> {
    in_range_with_threshold(m, b, tol, tol.membership_tol)
}

/// [`in_range`] with an explicit relative membership threshold.
pub fn in_range_with_threshold(
    m: &DenseMatrix,
    b: &Vector,
    tol: &Tolerance,
    membership: f64,
) -> Result<RangeCheck, LinalgError> {
    if b.len() != m.rows() {
        return Err(LinalgError::DimensionMismatch {
            expected: m.rows(),
            found: b.len(),
        });
    }
    let bn = b.norm();
    if bn == 0.0 {
        return Ok(RangeCheck {
            in_range: true,
            residual: 0.0,
            relative: 0.0,
        });
    }
    let d = svd(m)?;
    let threshold = tol.rank_threshold(m.rows().max(m.cols()), d.sigma_max());
    let rank = if d.sigma_max() == 0.0 { 0 } else { d.rank(threshold) };
    let residual = d.range_residual(b, rank);
    let relative = residual / bn;
    Ok(RangeCheck {
        in_range: relative <= membership,
        residual,
        relative,
    })
}

/// Spectral norm `σ_max(M)`.
pub fn spectral_norm(m: &DenseMatrix) -> Result<f64, LinalgError> {
    Ok(svd(m)?.sigma_max())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex1_final() -> DenseMatrix {
        DenseMatrix::from_real_rows(&[[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 1.0]]).unwrap()
    }

    fn reconstruct(d: &Svd) -> DenseMatrix {
        let s: Vec<C64> = d.singular_values.iter().map(|&x| C64::new(x, 0.0)).collect();
        d.u.matmul(&DenseMatrix::from_diag(&s)).matmul(&d.v.adjoint())
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let info = rank_and_nullspace(&DenseMatrix::zeros(3, 3), &Tolerance::default()).unwrap();
        assert_eq!(info.rank, 0);
        assert_eq!(info.nullity, 3);
        assert!(info.basis.unwrap().orthonormality_defect() < 1e-15);
    }

    #[test]
    fn example_one_system_has_rank_one() {
        let info = rank_and_nullspace(&ex1_final(), &Tolerance::default()).unwrap();
        assert_eq!(info.rank, 1);
        assert!((info.singular_values[0] - 2f64.sqrt()).abs() < 1e-15);
        let n = info.basis.unwrap();
        assert!(ex1_final().matmul(&n).norm_fro() < 1e-15);
    }

    #[test]
    fn reconstructs_complex_matrix() {
        let m = DenseMatrix::from_rows(&[
            [C64::new(1.0, 2.0), C64::new(0.5, -1.0), C64::new(3.0, 0.0)],
            [C64::new(-2.0, 0.0), C64::new(1.0, 1.0), C64::new(0.0, 0.25)],
        ])
        .unwrap();
        let d = svd(&m).unwrap();
        let err = reconstruct(&d).sub(&m).norm_fro();
        assert!(err < 1e-13, "err {err} {:?}", d.singular_values);
        assert!(d.v.orthonormality_defect() < 1e-14);
        assert!(d.singular_values.windows(2).all(|w| w[0] >= w[1]));
        assert!(d.singular_values[2] < 1e-14);
    }

    #[test]
    fn range_membership() {
        let tol = Tolerance::default();
        let m = ex1_final();
        let yes = in_range(&m, &Vector::from_real(&[0.0, 1.0, 1.0]).unwrap(), &tol).unwrap();
        assert!(yes.in_range && yes.residual < 1e-15);
        let no = in_range(&m, &Vector::from_real(&[0.0, -1.0, 0.0]).unwrap(), &tol).unwrap();
        assert!(!no.in_range);
        assert!((no.residual - 0.5f64.sqrt()).abs() < 1e-15);
        let id = in_range(&DenseMatrix::identity(3), &Vector::ones(3), &tol).unwrap();
        assert!(id.in_range && id.residual < 1e-15);
    }

    #[test]
    fn min_norm_solution() {
        let m = ex1_final();
        let d = svd(&m).unwrap();
        let x = d.solve_min_norm(&Vector::from_real(&[0.0, 1.0, 1.0]).unwrap(), 1e-12);
        assert!(x.sub(&Vector::unit(3, 2)).norm() < 1e-15);
    }
}
