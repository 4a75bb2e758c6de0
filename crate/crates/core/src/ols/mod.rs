//! Ordinary least squares without intercept on mean-centred data, and the
//! discard rule based on coefficient p-values.

mod special;

use serde::Serialize;

pub use special::{incomplete_beta, ln_gamma, student_t_sf, CF_TOLERANCE};

use crate::error::{Error, Result};
use crate::linalg::{check_centred, Cholesky, Matrix, SymmetricMatrix, Vector};
use crate::perturbation::PerturbationSplit;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OlsFit<T> {
    pub coefficients: Vec<T>,
    pub residuals: Vec<T>,
    pub standard_errors: Vec<T>,
    pub t_stats: Vec<T>,
    /// Two-sided p-values under `H0: β_j = 0`.
    pub p_values: Vec<T>,
    /// `RSS / (N - M)`.
    pub residual_variance: T,
    pub df: usize,
}

/// Fits `y = Xβ + ε` by least squares. Both `x` and `y` must be centred.
///
/// Standard errors use `σ̂² = RSS / (N - M)`; a zero standard error yields
/// `t = ±∞` (p = 0) unless the coefficient is itself zero (t = 0, p = 1).
pub fn ols_fit<T: Scalar>(x: &Matrix<T>, y: &Vector<T>) -> Result<OlsFit<T>> {
    let (n, m) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} design rows with {} responses",
            y.len()
        )));
    }
    if m == 0 || n <= m {
        return Err(Error::InsufficientData { rows: n, cols: m });
    }
    check_centred(x)?;
    check_centred(&Matrix::new(n, 1, y.as_slice().to_vec())?).map_err(|e| match e {
        Error::NotCentred { sum, .. } => Error::NotCentred { column: m, sum },
        other => other,
    })?;

    let gram =
        SymmetricMatrix::from_lower_fn(m, |i, j| (0..n).map(|k| x.get(k, i) * x.get(k, j)).sum());
    let xty = Vector::new(
        (0..m)
            .map(|j| (0..n).map(|k| x.get(k, j) * y[k]).sum())
            .collect(),
    )?;
    let chol = Cholesky::new(&gram)?;
    let beta = chol.solve(&xty)?;
    let gram_inv = chol.inverse()?;

    let fitted = x.mul_vec(&beta)?;
    let residuals: Vec<T> = (0..n).map(|k| y[k] - fitted[k]).collect();
    let rss: T = residuals.iter().map(|&r| r * r).sum();
    let df = n - m;
    let df_t = T::of(df as f64);
    let residual_variance = rss / df_t;

    let mut fit = OlsFit {
        coefficients: beta.into_vec(),
        residuals,
        standard_errors: Vec::with_capacity(m),
        t_stats: Vec::with_capacity(m),
        p_values: Vec::with_capacity(m),
        residual_variance,
        df,
    };
    for j in 0..m {
        let b = fit.coefficients[j];
        let se = (residual_variance * gram_inv.get(j, j)).sqrt();
        let t = if se > T::zero() {
            b / se
        } else if b == T::zero() {
            T::zero()
        } else {
            b.signum() * T::infinity()
        };
        fit.standard_errors.push(se);
        fit.t_stats.push(t);
        fit.p_values.push(student_t_sf(t, df_t)?);
    }
    Ok(fit)
}

fn check_alpha<T: Scalar>(alpha: T) -> Result<()> {
    if alpha > T::zero() && alpha < T::one() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "significance level must lie in (0, 1), got {alpha}"
        )))
    }
}

/// Per member of `d_set`: discard iff its p-value strictly exceeds `alpha`.
pub fn discard_by_ols<T: Scalar>(fit: &OlsFit<T>, d_set: &[usize], alpha: T) -> Result<Vec<bool>> {
    check_alpha(alpha)?;
    d_set
        .iter()
        .map(|&d| {
            fit.p_values
                .get(d)
                .map(|&p| p > alpha)
                .ok_or(Error::IndexOutOfRange {
                    index: d,
                    len: fit.p_values.len(),
                })
        })
        .collect()
}

/// All covariates discarded at `alpha`, ascending.
pub fn ols_discard_set<T: Scalar>(fit: &OlsFit<T>, alpha: T) -> Result<Vec<usize>> {
    check_alpha(alpha)?;
    Ok(fit
        .p_values
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > alpha)
        .map(|(j, _)| j)
        .collect())
}

/// First-order coefficient approximations for the discard block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproxCoefficients<T> {
    pub d_set: Vec<usize>,
    /// `(Σ⁻¹)[d,D] H* Cov*`: noise-only approximation of `β̂_d`.
    pub noise: Vec<T>,
    /// `(Σ⁻¹)[d,D] (E* + Ẽ*) Cov*`: approximation of `β̂̃_d`.
    pub perturbed: Vec<T>,
}

/// Approximated OLS coefficients on `D`, valid when the population has
/// `Σ[D, D^c] = 0` and `Cov[D] = 0`.
pub fn approx_coefficients<T: Scalar>(
    split: &PerturbationSplit<T>,
) -> Result<ApproxCoefficients<T>> {
    let pop = &split.population;
    let tol = T::tol(1e-12, 10.0) * pop.sigma.max_abs().max(T::one());
    for &d in &split.d_set {
        if pop.cov[d].abs() > tol {
            return Err(Error::Structural(format!(
                "population response covariance of variable {d} is {} (must vanish on D)",
                pop.cov[d]
            )));
        }
        for &c in &split.dc_set {
            if pop.sigma.get(d, c).abs() > tol {
                return Err(Error::Structural(format!(
                    "population covariance between {d} and {c} is {} (D must be uncorrelated with its complement)",
                    pop.sigma.get(d, c)
                )));
            }
        }
    }
    let perturbed = split.perturbed_star();
    let k = split.d_set.len();
    Ok(ApproxCoefficients {
        d_set: split.d_set.clone(),
        noise: (0..k).map(|i| split.sandwich(i, &split.h_star)).collect(),
        perturbed: (0..k).map(|i| split.sandwich(i, &perturbed)).collect(),
    })
}
