//! Column-major complex dense matrices and vectors.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::LinalgError;

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix stored column-major.
///
/// Matrices built from user data must be non-empty and finite. Derived
/// blocks (for example the orthogonal complement of a full basis, or the
/// leading block of a one-column split) may have zero columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    /// Column-major entries as `[re, im]` pairs.
    data: Vec<C64>,
}

impl TryFrom<RawMatrix> for DenseMatrix {
    type Error = LinalgError;

    fn try_from(raw: RawMatrix) -> Result<Self, Self::Error> {
        DenseMatrix::new(raw.rows, raw.cols, raw.data)
    }
}

impl From<DenseMatrix> for RawMatrix {
    fn from(m: DenseMatrix) -> Self {
        RawMatrix {
            rows: m.rows,
            cols: m.cols,
            data: m.data,
        }
    }
}

impl DenseMatrix {
    /// Builds a matrix from column-major entries, checking shape and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row slices of complex entries.
    pub fn from_rows<R: AsRef<[C64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = vec![ZERO; nrows * ncols];
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != ncols {
                return Err(LinalgError::DimensionMismatch {
                    expected: ncols,
                    found: row.len(),
                });
            }
            for (j, &z) in row.iter().enumerate() {
                data[j * nrows + i] = z;
            }
        }
        Self::new(nrows, ncols, data)
    }

    /// Builds a matrix from row slices of real entries (promoted to complex).
    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let promoted: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.as_ref().iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&promoted)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diag(&d)
    }

    /// Stacks vectors as columns. All vectors must share a length.
    pub fn from_columns(cols: &[Vector]) -> Self {
        let rows = cols.first().map_or(0, Vector::len);
        let mut data = Vec::with_capacity(rows * cols.len());
        for c in cols {
            assert_eq!(c.len(), rows, "column length mismatch");
            data.extend_from_slice(c.as_slice());
        }
        Self {
            rows,
            cols: cols.len(),
            data,
        }
    }

    pub fn from_column(v: &Vector) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.as_slice().to_vec(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Column-major entries.
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[C64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [C64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column(&self, j: usize) -> Vector {
        Vector(self.col(j).to_vec())
    }

    pub fn set_column(&mut self, j: usize, v: &Vector) {
        self.col_mut(j).copy_from_slice(v.as_slice());
    }

    pub fn row(&self, i: usize) -> Vector {
        Vector((0..self.cols).map(|j| self[(i, j)]).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            let out_col = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for l in 0..self.cols {
                let b = rhs[(l, j)];
                if b == ZERO {
                    continue;
                }
                let a_col = &self.data[l * self.rows..(l + 1) * self.rows];
                for (o, &a) in out_col.iter_mut().zip(a_col) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `selfᴴ · rhs` without forming the adjoint.
    pub fn adjoint_mul(&self, rhs: &DenseMatrix) -> Self {
        assert_eq!(self.rows, rhs.rows, "adjoint_mul shape mismatch");
        let mut out = Self::zeros(self.cols, rhs.cols);
        for j in 0..rhs.cols {
            let b = rhs.col(j);
            for i in 0..self.cols {
                out[(i, j)] = cdot(self.col(i), b);
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &Vector) -> Vector {
        assert_eq!(self.cols, x.len(), "mul_vec shape mismatch");
        let mut out = vec![ZERO; self.rows];
        for (l, &xl) in x.as_slice().iter().enumerate() {
            if xl == ZERO {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.col(l)) {
                *o += a * xl;
            }
        }
        Vector(out)
    }

    /// `selfᴴ · x`.
    pub fn adjoint_mul_vec(&self, x: &Vector) -> Vector {
        assert_eq!(self.rows, x.len(), "adjoint_mul_vec shape mismatch");
        Vector((0..self.cols).map(|j| cdot(self.col(j), x.as_slice())).collect())
    }

    pub fn add(&self, rhs: &DenseMatrix) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// `self − shift·I` for a square matrix.
    pub fn shifted(&self, shift: C64) -> Self {
        assert!(self.is_square(), "shift requires a square matrix");
        let mut out = self.clone();
        for i in 0..self.rows {
            out[(i, i)] -= shift;
        }
        out
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Columns `start..end` as a new matrix.
    pub fn columns(&self, start: usize, end: usize) -> Self {
        assert!(start <= end && end <= self.cols);
        Self {
            rows: self.rows,
            cols: end - start,
            data: self.data[start * self.rows..end * self.rows].to_vec(),
        }
    }

    /// Sub-block `rows r0..r1`, `cols c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        assert!(r0 <= r1 && r1 <= self.rows && c0 <= c1 && c1 <= self.cols);
        let mut out = Self::zeros(r1 - r0, c1 - c0);
        for j in c0..c1 {
            for i in r0..r1 {
                out[(i - r0, j - c0)] = self[(i, j)];
            }
        }
        out
    }

    /// Horizontal concatenation `[self, rhs]`.
    pub fn hcat(&self, rhs: &DenseMatrix) -> Self {
        assert_eq!(self.rows, rhs.rows, "hcat row mismatch");
        let mut data = self.data.clone();
        data.extend_from_slice(&rhs.data);
        Self {
            rows: self.rows,
            cols: self.cols + rhs.cols,
            data,
        }
    }

    pub fn push_column(&mut self, v: &Vector) {
        assert_eq!(v.len(), self.rows, "column length mismatch");
        self.data.extend_from_slice(v.as_slice());
        self.cols += 1;
    }

    /// `‖selfᴴ·self − I‖_F`, the departure from orthonormal columns.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.adjoint_mul(self);
        g.sub(&Self::identity(self.cols)).norm_fro()
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

/// `xᴴ y` over raw slices.
#[inline]
pub(crate) fn cdot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).fold(ZERO, |acc, (a, b)| acc + a.conj() * b)
}

/// Complex column vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<C64>);

impl Vector {
    /// Checked constructor: rejects empty or non-finite input.
    pub fn new(data: Vec<C64>) -> Result<Self, LinalgError> {
        if data.is_empty() {
            return Err(LinalgError::EmptyMatrix);
        }
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self(data))
    }

    pub fn from_real(data: &[f64]) -> Result<Self, LinalgError> {
        Self::new(data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![ZERO; n])
    }

    /// The `i`-th standard basis vector of length `n`.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[i] = ONE;
        v
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![ONE; n])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, C64> {
        self.0.iter()
    }

    /// `selfᴴ other`.
    pub fn dot(&self, other: &Vector) -> C64 {
        assert_eq!(self.len(), other.len(), "dot length mismatch");
        cdot(&self.0, &other.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: C64) -> Vector {
        Vector(self.0.iter().map(|z| z * s).collect())
    }

    pub fn scale_real(&self, s: f64) -> Vector {
        Vector(self.0.iter().map(|z| z * s).collect())
    }

    /// `self += alpha · x`.
    pub fn axpy(&mut self, alpha: C64, x: &Vector) {
        assert_eq!(self.len(), x.len(), "axpy length mismatch");
        for (a, b) in self.0.iter_mut().zip(&x.0) {
            *a += alpha * b;
        }
    }

    pub fn add(&self, other: &Vector) -> Vector {
        assert_eq!(self.len(), other.len());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        assert_eq!(self.len(), other.len());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> Vector {
        Vector(self.0.iter().map(|z| -z).collect())
    }

    /// Unit-norm copy; `None` for the zero vector.
    pub fn normalized(&self) -> Option<Vector> {
        let n = self.norm();
        (n > 0.0).then(|| self.scale_real(1.0 / n))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl From<Vec<C64>> for Vector {
    fn from(v: Vec<C64>) -> Self {
        Vector(v)
    }
}

impl Index<usize> for Vector {
    type Output = C64;

    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.0[i]
    }
}

impl<'a> IntoIterator for &'a Vector {
    type Item = &'a C64;
    type IntoIter = std::slice::Iter<'a, C64>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}
