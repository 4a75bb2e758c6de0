//! Symmetric eigendecomposition by cyclic Jacobi rotations.

use std::cmp::Ordering;

use serde::Serialize;

use super::matrix::{Matrix, SymmetricMatrix, Vector};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sweep cap for the Jacobi iteration.
pub const MAX_SWEEPS: usize = 100;

/// Relative off-diagonal Frobenius tolerance at which the iteration stops.
pub const OFF_DIAGONAL_TOL: f64 = 1e-12;

/// Eigenvalues in descending order with orthonormal eigenvectors as columns.
///
/// Each eigenvector is sign-normalized so that its largest-magnitude entry is
/// non-negative (lowest index wins a magnitude tie). Pairs with equal
/// eigenvalues are ordered by that dominant index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenSystem<T> {
    eigenvalues: Vec<T>,
    eigenvectors: Matrix<T>,
}

impl<T: Scalar> EigenSystem<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    /// Eigenvectors stored column-wise: column `k` pairs with `eigenvalues()[k]`.
    pub fn eigenvectors(&self) -> &Matrix<T> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, k: usize) -> Vector<T> {
        self.eigenvectors.column(k)
    }

    /// Loading `v_pair^(variable)`.
    #[inline]
    pub fn loading(&self, variable: usize, pair: usize) -> T {
        self.eigenvectors.get(variable, pair)
    }

    /// `V Λ Vᵀ`.
    pub fn reconstruct(&self) -> SymmetricMatrix<T> {
        let n = self.dim();
        SymmetricMatrix::from_lower_fn(n, |i, j| {
            (0..n)
                .map(|k| self.loading(i, k) * self.eigenvalues[k] * self.loading(j, k))
                .sum()
        })
    }
}

/// Index of the dominant entry: the lowest index whose magnitude is within a
/// relative `tie` of the maximum.
fn dominant_index<T: Scalar>(column: &[T]) -> usize {
    let max = column.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let tie = T::tol(1e-10, 100.0);
    column
        .iter()
        .position(|v| v.abs() >= max * (T::one() - tie))
        .unwrap_or(0)
}

/// Eigendecomposition of a symmetric matrix.
///
/// Runs cyclic Jacobi sweeps until the off-diagonal Frobenius norm drops to
/// `1e-12 · ‖A‖_F` (floored at the scalar's resolution), failing after
/// [`MAX_SWEEPS`] sweeps.
pub fn eigh<T: Scalar>(a: &SymmetricMatrix<T>) -> Result<EigenSystem<T>> {
    let n = a.dim();
    let mut w = a.matrix().clone();
    let mut v = Matrix::<T>::identity(n);
    let tol = T::tol(OFF_DIAGONAL_TOL, 10.0) * a.frobenius_norm();

    let off_norm = |w: &Matrix<T>| {
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += w.get(i, j) * w.get(i, j);
                }
            }
        }
        s.sqrt()
    };

    let mut converged = false;
    for _ in 0..=MAX_SWEEPS {
        if off_norm(&w) <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w.get(p, q);
                if apq == T::zero() {
                    continue;
                }
                let app = w.get(p, p);
                let aqq = w.get(q, q);
                let two = T::one() + T::one();
                let theta = (aqq - app) / (two * apq);
                let t = if theta >= T::zero() {
                    T::one() / (theta + theta.hypot(T::one()))
                } else {
                    -T::one() / (-theta + theta.hypot(T::one()))
                };
                let c = T::one() / t.hypot(T::one());
                let s = t * c;

                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = w.get(k, p);
                    let akq = w.get(k, q);
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    w.set(k, p, new_kp);
                    w.set(p, k, new_kp);
                    w.set(k, q, new_kq);
                    w.set(q, k, new_kq);
                }
                w.set(p, p, app - t * apq);
                w.set(q, q, aqq + t * apq);
                w.set(p, q, T::zero());
                w.set(q, p, T::zero());

                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    if !converged {
        return Err(Error::NumericalFailure(format!(
            "Jacobi iteration did not converge within {MAX_SWEEPS} sweeps"
        )));
    }

    let mut pairs: Vec<(T, Vec<T>, usize)> = (0..n)
        .map(|k| {
            let mut col: Vec<T> = (0..n).map(|i| v.get(i, k)).collect();
            let dom = dominant_index(&col);
            if col[dom] < T::zero() {
                col.iter_mut().for_each(|x| *x = -*x);
            }
            (w.get(k, k), col, dom)
        })
        .collect();
    pairs.sort_by(|a, b| match b.0.partial_cmp(&a.0) {
        Some(Ordering::Equal) | None => a.2.cmp(&b.2),
        Some(o) => o,
    });

    let eigenvalues = pairs.iter().map(|p| p.0).collect();
    let eigenvectors = Matrix::from_fn(n, n, |i, k| pairs[k].1[i]);
    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(rows: &[[f64; 2]]) -> SymmetricMatrix<f64> {
        SymmetricMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn identity_keeps_unit_vectors() {
        let e = eigh(&SymmetricMatrix::<f64>::identity(2)).unwrap();
        assert_eq!(e.eigenvalues(), &[1.0, 1.0]);
        assert_eq!(e.eigenvectors(), &Matrix::identity(2));
    }

    #[test]
    fn diagonal_sorted_descending() {
        let e = eigh(&SymmetricMatrix::diagonal(&[1.0, 4.0])).unwrap();
        assert_eq!(e.eigenvalues(), &[4.0, 1.0]);
        assert_eq!(e.eigenvector(0).as_slice(), &[0.0, 1.0]);
        assert_eq!(e.eigenvector(1).as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn two_by_two_closed_form() {
        // Characteristic polynomial (2-λ)² - 1 has roots 3 and 1.
        let e = eigh(&sym(&[[2.0, 1.0], [1.0, 2.0]])).unwrap();
        assert!((e.eigenvalues()[0] - 3.0).abs() < 1e-14);
        assert!((e.eigenvalues()[1] - 1.0).abs() < 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let v1 = e.eigenvector(0);
        assert!((v1[0] - r).abs() < 1e-14 && (v1[1] - r).abs() < 1e-14);
        // Second vector is ±(1,-1)/√2 with the dominant (first, by tie) entry positive.
        let v2 = e.eigenvector(1);
        assert!((v2[0] - r).abs() < 1e-14 && (v2[1] + r).abs() < 1e-14);
    }

    #[test]
    fn sign_convention_makes_dominant_entry_non_negative() {
        let a = SymmetricMatrix::from_rows(&[[1.0, -0.9, 0.2], [-0.9, 2.0, 0.3], [0.2, 0.3, 0.5]])
            .unwrap();
        let e = eigh(&a).unwrap();
        for k in 0..3 {
            let col = e.eigenvector(k);
            let dom = dominant_index(col.as_slice());
            assert!(col[dom] >= 0.0);
        }
    }

    #[test]
    fn zero_matrix() {
        let e = eigh(&SymmetricMatrix::<f64>::zeros(3)).unwrap();
        assert_eq!(e.eigenvalues(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn f32_two_by_two() {
        let a = SymmetricMatrix::<f32>::from_rows(&[[2.0f32, 1.0], [1.0, 2.0]]).unwrap();
        let e = eigh(&a).unwrap();
        assert!((e.eigenvalues()[0] - 3.0).abs() < 1e-5);
    }
}
