//! Dense row-major containers: general matrices, symmetric matrices and vectors.

use std::ops::Index;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense `rows x cols` matrix with finite entries, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

/// Frobenius norm together with the spectral-norm upper bound it implies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatrixNorms<T> {
    pub frobenius: T,
    /// `‖M‖_2 <= ‖M‖_F`, so the Frobenius norm doubles as the bound.
    pub spectral_upper: T,
}

fn check_finite<T: Scalar>(data: &[T], cols: usize) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(k) => Err(Error::NonFinite {
            row: k / cols.max(1),
            col: k % cols.max(1),
        }),
        None => Ok(()),
    }
}

fn sum_squares<T: Scalar>(values: impl Iterator<Item = T>) -> T {
    values.fold(T::zero(), |acc, v| acc + v * v)
}

impl<T: Scalar> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DegenerateInput(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        check_finite(&data, cols)?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: T) {
        self.data[i * self.cols + j] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vector<T> {
        Vector((0..self.rows).map(|i| self.get(i, j)).collect())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &Vector<T>) -> Result<Vector<T>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix times length-{} vector",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok(Vector(
            (0..self.rows)
                .map(|i| dot(self.row(i), v.as_slice()))
                .collect(),
        ))
    }

    /// Sub-matrix `M[rows, cols]` in the order the indices are given.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Matrix<T> {
        Matrix::from_fn(rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]))
    }

    pub fn frobenius_norm(&self) -> T {
        sum_squares(self.data.iter().copied()).sqrt()
    }

    pub fn norms(&self) -> MatrixNorms<T> {
        let f = self.frobenius_norm();
        MatrixNorms {
            frobenius: f,
            spectral_upper: f,
        }
    }

    /// ℓ2 norm of row `r`.
    pub fn row_norm(&self, r: usize) -> Result<T> {
        if r >= self.rows {
            return Err(Error::IndexOutOfRange {
                index: r,
                len: self.rows,
            });
        }
        Ok(sum_squares(self.row(r).iter().copied()).sqrt())
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn zip_with(&self, other: &Matrix<T>, f: impl Fn(T, T) -> T) -> Result<Matrix<T>> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, factor: T) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * factor).collect(),
        }
    }

    /// Lossy conversion to `f64` rows, for reporting.
    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.to_f64_lossy()).collect())
            .collect()
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Square matrix with `a[i][j] == a[j][i]` bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SymmetricMatrix<T>(Matrix<T>);

impl<T: Scalar> SymmetricMatrix<T> {
    /// Symmetrizes by averaging mirrored entries; exactly symmetric input is
    /// returned unchanged.
    pub fn from_matrix(mut m: Matrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square, got {}x{}",
                m.rows, m.cols
            )));
        }
        check_finite(&m.data, m.cols)?;
        let two = T::one() + T::one();
        for i in 0..m.rows {
            for j in (i + 1)..m.cols {
                let (a, b) = (m.get(i, j), m.get(j, i));
                let v = if a == b { a } else { (a + b) / two };
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        Ok(Self(m))
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        Self::from_matrix(Matrix::from_rows(rows)?)
    }

    /// Builds from the lower triangle; `f(i, j)` is only called for `j <= i`.
    pub fn from_lower_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        Self(m)
    }

    pub fn identity(n: usize) -> Self {
        Self(Matrix::identity(n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(Matrix::zeros(n, n))
    }

    pub fn diagonal(values: &[T]) -> Self {
        let n = values.len();
        Self(Matrix::from_fn(n, n, |i, j| {
            if i == j {
                values[i]
            } else {
                T::zero()
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.0.get(i, j)
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.0
    }

    pub fn diag(&self) -> Vector<T> {
        Vector((0..self.dim()).map(|i| self.get(i, i)).collect())
    }

    pub fn trace(&self) -> T {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// Principal sub-matrix on `idx`.
    pub fn principal(&self, idx: &[usize]) -> SymmetricMatrix<T> {
        SymmetricMatrix(self.0.select(idx, idx))
    }

    /// Off-diagonal block `A[rows, cols]`.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> Matrix<T> {
        self.0.select(rows, cols)
    }

    pub fn add(&self, other: &SymmetricMatrix<T>) -> Result<SymmetricMatrix<T>> {
        Ok(SymmetricMatrix(self.0.add(&other.0)?))
    }

    pub fn sub(&self, other: &SymmetricMatrix<T>) -> Result<SymmetricMatrix<T>> {
        Ok(SymmetricMatrix(self.0.sub(&other.0)?))
    }

    pub fn scale(&self, factor: T) -> SymmetricMatrix<T> {
        SymmetricMatrix(self.0.scale(factor))
    }

    pub fn frobenius_norm(&self) -> T {
        self.0.frobenius_norm()
    }

    pub fn max_abs(&self) -> T {
        self.0.max_abs()
    }

    pub fn mul_vec(&self, v: &Vector<T>) -> Result<Vector<T>> {
        self.0.mul_vec(v)
    }
}

impl<T> Index<(usize, usize)> for SymmetricMatrix<T> {
    type Output = T;

    fn index(&self, idx: (usize, usize)) -> &T {
        &self.0[idx]
    }
}

/// Dense vector with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Vector<T>(Vec<T>);

impl<T: Scalar> Vector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        check_finite(&values, 1)?;
        Ok(Self(values))
    }

    pub fn from_slice(values: &[T]) -> Result<Self> {
        Self::new(values.to_vec())
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![T::zero(); len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.0.iter()
    }

    pub fn dot(&self, other: &Vector<T>) -> T {
        dot(&self.0, &other.0)
    }

    pub fn norm(&self) -> T {
        sum_squares(self.0.iter().copied()).sqrt()
    }

    pub fn select(&self, idx: &[usize]) -> Vector<T> {
        Vector(idx.iter().map(|&i| self.0[i]).collect())
    }

    pub fn add(&self, other: &Vector<T>) -> Result<Vector<T>> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Vector<T>) -> Result<Vector<T>> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, factor: T) -> Vector<T> {
        Vector(self.0.iter().map(|&v| v * factor).collect())
    }

    pub fn max_abs(&self) -> T {
        self.0.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    fn zip_with(&self, other: &Vector<T>, f: impl Fn(T, T) -> T) -> Result<Vector<T>> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch(format!(
                "vector lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(Vector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.0.iter().map(|v| v.to_f64_lossy()).collect()
    }
}

impl<T> Index<usize> for Vector<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}
