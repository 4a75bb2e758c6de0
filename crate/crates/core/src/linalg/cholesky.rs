//! Cholesky factorization and symmetric positive-definite solves.

use super::matrix::{Matrix, SymmetricMatrix, Vector};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest accepted condition estimate for a solve.
pub const MAX_CONDITION: f64 = 1e12;

/// Lower-triangular factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Factors `a`, rejecting non-positive pivots and condition estimates
    /// above [`MAX_CONDITION`] (capped at `1/epsilon` for narrow types).
    ///
    /// The estimate is `(max L_ii / min L_ii)²`, a lower bound on the
    /// spectral condition number.
    pub fn new(a: &SymmetricMatrix<T>) -> Result<Self> {
        let n = a.dim();
        let mut l = Matrix::<T>::zeros(n, n);
        for j in 0..n {
            let mut d = a.get(j, j);
            for k in 0..j {
                d -= l.get(j, k) * l.get(j, k);
            }
            if !(d > T::zero()) {
                return Err(Error::Singular {
                    condition: f64::INFINITY,
                });
            }
            let ljj = d.sqrt();
            l.set(j, j, ljj);
            for i in (j + 1)..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, s / ljj);
            }
        }
        let (lo, hi) = (0..n).fold((T::infinity(), T::zero()), |(lo, hi), i| {
            (lo.min(l.get(i, i)), hi.max(l.get(i, i)))
        });
        let ratio = hi / lo;
        let condition = ratio * ratio;
        let limit = T::of(MAX_CONDITION).min(T::one() / T::epsilon());
        if !(condition <= limit) {
            return Err(Error::Singular {
                condition: condition.to_f64_lossy(),
            });
        }
        Ok(Self { l })
    }

    pub fn factor(&self) -> &Matrix<T> {
        &self.l
    }

    pub fn solve(&self, b: &Vector<T>) -> Result<Vector<T>> {
        let n = self.l.rows();
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "rhs length {} for a {n}x{n} system",
                b.len()
            )));
        }
        let mut y = vec![T::zero(); n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l.get(i, k) * y[k];
            }
            y[i] = s / self.l.get(i, i);
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l.get(k, i) * y[k];
            }
            y[i] = s / self.l.get(i, i);
        }
        Vector::new(y)
    }

    pub fn inverse(&self) -> Result<SymmetricMatrix<T>> {
        let n = self.l.rows();
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let mut e = Vector::zeros(n).into_vec();
            e[j] = T::one();
            cols.push(self.solve(&Vector::new(e)?)?);
        }
        SymmetricMatrix::from_matrix(Matrix::from_fn(n, n, |i, j| cols[j][i]))
    }
}

/// Solves `a x = b` for symmetric positive-definite `a`.
pub fn solve_spd<T: Scalar>(a: &SymmetricMatrix<T>, b: &Vector<T>) -> Result<Vector<T>> {
    Cholesky::new(a)?.solve(b)
}

/// `a⁻¹` for symmetric positive-definite `a`.
pub fn inverse_spd<T: Scalar>(a: &SymmetricMatrix<T>) -> Result<SymmetricMatrix<T>> {
    Cholesky::new(a)?.inverse()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector<f64> {
        Vector::from_slice(x).unwrap()
    }

    #[test]
    fn identity_returns_rhs() {
        let b = v(&[3.0, -1.0, 2.5]);
        assert_eq!(solve_spd(&SymmetricMatrix::identity(3), &b).unwrap(), b);
    }

    #[test]
    fn diagonal_system() {
        let x = solve_spd(&SymmetricMatrix::diagonal(&[2.0, 4.0]), &v(&[2.0, 4.0])).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dense_two_by_two() {
        let a = SymmetricMatrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let x = solve_spd(&a, &v(&[3.0, 3.0])).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_and_indefinite_rejected() {
        let singular = SymmetricMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(matches!(
            solve_spd(&singular, &v(&[1.0, 1.0])),
            Err(Error::Singular { .. })
        ));
        let indefinite = SymmetricMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(solve_spd(&indefinite, &v(&[1.0, 1.0])).is_err());
        let ill = SymmetricMatrix::diagonal(&[1.0, 1e-13]);
        assert!(matches!(
            solve_spd(&ill, &v(&[1.0, 1.0])),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = SymmetricMatrix::from_rows(&[[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]])
            .unwrap();
        let inv = inverse_spd(&a).unwrap();
        let prod = a.matrix().matmul(inv.matrix()).unwrap();
        let err = prod.sub(&Matrix::identity(3)).unwrap().max_abs();
        assert!(err < 1e-14);
    }
}
