use super::{DenseMatrix, LinalgError, Vector, C64, ONE, ZERO};

/// Largest order accepted by [`small_eig`].
pub const DEFAULT_EIG_CAP: usize = 64;

/// Complex Schur form `M = Z T Zᴴ` with `T` upper triangular and `Z` unitary.
#[derive(Debug, Clone)]
pub struct Schur {
    pub t: DenseMatrix,
    pub z: DenseMatrix,
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: C64,
    /// Unit-norm eigenvector.
    pub vector: Vector,
}

/// Eigenpairs of a small dense matrix, in the order they appear on the
/// diagonal of the Schur form.
pub fn small_eig(t: &DenseMatrix) -> Result<Vec<EigenPair>, LinalgError> {
    small_eig_with_cap(t, DEFAULT_EIG_CAP)
}

#[allow(clippy::needless_range_loop)]
pub fn small_eig_with_cap(t: &DenseMatrix, cap: usize) -> Result<Vec<EigenPair>, LinalgError> {
    if t.rows() > cap {
        return Err(LinalgError::TooLarge { order: t.rows(), cap });
    }
    let s = schur(t)?;
    let n = s.t.rows();
    let scale = s.t.norm_fro();
    let smin = (f64::EPSILON * scale).max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lambda = s.t[(i, i)];
        let mut x = vec![ZERO; n];
        x[i] = ONE;
        for j in (0..i).rev() {
            let mut acc = s.t[(j, i)];
            for k in j + 1..i {
                acc += s.t[(j, k)] * x[k];
            }
            let mut d = s.t[(j, j)] - lambda;
            if d.norm() < smin {
                d = C64::new(smin, 0.0);
            }
            x[j] = -acc / d;
            let big = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if big > 1e100 {
                for z in x.iter_mut() {
                    *z /= big;
                }
            }
        }
        let y = s.z.mul_vec(&Vector::from(x));
        let vector = y.normalized().ok_or(LinalgError::NoConvergence {
            what: "eigenvector back-substitution",
            iterations: 0,
        })?;
        out.push(EigenPair { value: lambda, vector });
    }
    Ok(out)
}

/// Complex Schur decomposition by Householder reduction to Hessenberg form
/// followed by single-shift QR iteration with Wilkinson shifts.
pub fn schur(m: &DenseMatrix) -> Result<Schur, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if !m.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = m.rows();
    let (mut h, mut z) = hessenberg(m);
    let norm = h.norm_fro();
    let max_iter = 30 * n.max(1);
    let mut iterations = 0;
    let mut since_deflation = 0;
    let mut hi = n;
    while hi > 1 {
        let last = hi - 1;
        // Locate the start of the trailing unreduced block.
        let mut l = last;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let mut diag = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            if diag == 0.0 {
                diag = norm;
            }
            if sub <= f64::EPSILON * diag {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == last {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        if iterations >= max_iter {
            return Err(LinalgError::NoConvergence {
                what: "shifted QR iteration",
                iterations,
            });
        }
        iterations += 1;
        since_deflation += 1;

        let mu = if since_deflation % 11 == 10 {
            h[(last, last)] + C64::new(0.75 * h[(last, last - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(
                h[(last - 1, last - 1)],
                h[(last - 1, last)],
                h[(last, last - 1)],
                h[(last, last)],
            )
        };
        qr_step(&mut h, &mut z, l, last, mu);
    }
    for j in 0..n {
        for i in j + 1..n {
            h[(i, j)] = ZERO;
        }
    }
    Ok(Schur { t: h, z })
}

/// Eigenvalue of `[[a, b], [c, d]]` closer to `d`.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half_tr = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (half_tr * half_tr - det).sqrt();
    let l1 = half_tr + disc;
    let l2 = half_tr - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Givens rotation `G = [[c, s], [−s̄, c]]` with `G·[a, b]ᵀ = [ν·a/|a|, 0]ᵀ`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, ZERO);
    }
    let nu = na.hypot(nb);
    if na == 0.0 {
        return (0.0, b.conj() / nu);
    }
    (na / nu, (a / na) * b.conj() / nu)
}

/// One explicit shifted QR step on the active block `lo..=hi`, applied to the
/// whole matrix so that the accumulated `Z` stays consistent.
fn qr_step(h: &mut DenseMatrix, z: &mut DenseMatrix, lo: usize, hi: usize, mu: C64) {
    let n = h.rows();
    for k in lo..=hi {
        h[(k, k)] -= mu;
    }
    let mut rots = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
        for j in k..n {
            let x = h[(k, j)];
            let y = h[(k + 1, j)];
            h[(k, j)] = x * c + s * y;
            h[(k + 1, j)] = -s.conj() * x + y * c;
        }
        rots.push((c, s));
    }
    for (idx, &(c, s)) in rots.iter().enumerate() {
        let k = lo + idx;
        for i in 0..=(k + 1).min(hi) {
            let x = h[(i, k)];
            let y = h[(i, k + 1)];
            h[(i, k)] = x * c + y * s.conj();
            h[(i, k + 1)] = -x * s + y * c;
        }
        for i in 0..n {
            let x = z[(i, k)];
            let y = z[(i, k + 1)];
            z[(i, k)] = x * c + y * s.conj();
            z[(i, k + 1)] = -x * s + y * c;
        }
    }
    for k in lo..=hi {
        h[(k, k)] += mu;
    }
}

/// Householder reduction `M = Q H Qᴴ` with `H` upper Hessenberg.
fn hessenberg(m: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let n = m.rows();
    let mut h = m.clone();
    let mut q = DenseMatrix::identity(n);
    for j in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (j + 1..n).map(|i| h[(i, j)]).collect();
        let alpha = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let tail: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { ONE };
        let mut w = x;
        w[0] += phase * alpha;
        let tau = 2.0 / w.iter().map(|z| z.norm_sqr()).sum::<f64>();
        // Left: rows j+1.., all columns from j.
        for c in j..n {
            let mut dot = ZERO;
            for (k, wk) in w.iter().enumerate() {
                dot += wk.conj() * h[(j + 1 + k, c)];
            }
            let f = dot * tau;
            for (k, wk) in w.iter().enumerate() {
                h[(j + 1 + k, c)] -= f * wk;
            }
        }
        // Right: columns j+1.., all rows; also accumulate Q.
        for target in [&mut h, &mut q] {
            for r in 0..n {
                let mut dot = ZERO;
                for (k, wk) in w.iter().enumerate() {
                    dot += target[(r, j + 1 + k)] * wk;
                }
                let f = dot * tau;
                for (k, wk) in w.iter().enumerate() {
                    target[(r, j + 1 + k)] -= f * wk.conj();
                }
            }
        }
        for i in j + 2..n {
            h[(i, j)] = ZERO;
        }
    }
    (h, q)
}
