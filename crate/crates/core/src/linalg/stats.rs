//! Sample moments: centring, covariance, correlation and angles.

use super::matrix::{Matrix, SymmetricMatrix, Vector};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Subtracts column means.
pub fn mean_center<T: Scalar>(data: &Matrix<T>) -> Result<Matrix<T>> {
    let n = data.rows();
    if n < 2 {
        return Err(Error::DegenerateInput(format!(
            "mean-centring needs at least 2 rows, got {n}"
        )));
    }
    let count = T::from_usize(n).expect("row count representable");
    let means: Vec<T> = (0..data.cols())
        .map(|j| (0..n).map(|i| data.get(i, j)).sum::<T>() / count)
        .collect();
    Ok(Matrix::from_fn(n, data.cols(), |i, j| {
        data.get(i, j) - means[j]
    }))
}

/// Tolerance on a column sum for the data to count as centred.
fn centring_tolerance<T: Scalar>(data: &Matrix<T>) -> T {
    let n = T::from_usize(data.rows()).expect("row count representable");
    T::tol(1e-9, 1000.0) * n * data.max_abs().max(T::one())
}

/// Fails with [`Error::NotCentred`] on the first column whose sum exceeds the
/// centring tolerance.
pub fn check_centred<T: Scalar>(data: &Matrix<T>) -> Result<()> {
    let tol = centring_tolerance(data);
    for j in 0..data.cols() {
        let sum: T = (0..data.rows()).map(|i| data.get(i, j)).sum();
        if sum.abs() > tol {
            return Err(Error::NotCentred {
                column: j,
                sum: sum.to_f64_lossy(),
            });
        }
    }
    Ok(())
}

/// `(N-1)⁻¹ XᵀX` of a mean-centred sample.
///
/// Entry `(i, j)` is accumulated over observations in row order and then
/// divided, and mirrored from the lower triangle.
pub fn sample_covariance<T: Scalar>(centered: &Matrix<T>) -> Result<SymmetricMatrix<T>> {
    let n = centered.rows();
    if n < 2 {
        return Err(Error::DegenerateInput(format!(
            "covariance needs at least 2 rows, got {n}"
        )));
    }
    check_centred(centered)?;
    let denom = T::from_usize(n - 1).expect("row count representable");
    Ok(SymmetricMatrix::from_lower_fn(centered.cols(), |i, j| {
        let mut s = T::zero();
        for k in 0..n {
            s += centered.get(k, i) * centered.get(k, j);
        }
        s / denom
    }))
}

/// `Dg(C)^{-1/2} C Dg(C)^{-1/2}` with an exact unit diagonal and entries
/// clamped to `[-1, 1]`.
pub fn correlation_from_covariance<T: Scalar>(
    cov: &SymmetricMatrix<T>,
) -> Result<SymmetricMatrix<T>> {
    let d = cov.diag();
    if let Some(index) = d.iter().position(|&v| !(v > T::zero())) {
        return Err(Error::DegenerateVariance {
            index,
            variance: d[index].to_f64_lossy(),
        });
    }
    Ok(SymmetricMatrix::from_lower_fn(cov.dim(), |i, j| {
        if i == j {
            T::one()
        } else {
            let r = cov.get(i, j) / (d[i] * d[j]).sqrt();
            r.max(-T::one()).min(T::one())
        }
    }))
}

/// `uᵀv / (‖u‖‖v‖)`, clamped to `[-1, 1]`.
pub fn cosine_angle<T: Scalar>(u: &Vector<T>, v: &Vector<T>) -> Result<T> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "angle between vectors of length {} and {}",
            u.len(),
            v.len()
        )));
    }
    let (nu, nv) = (u.norm(), v.norm());
    if nu == T::zero() || nv == T::zero() {
        return Err(Error::DegenerateAngle);
    }
    Ok((u.dot(v) / (nu * nv)).max(-T::one()).min(T::one()))
}
