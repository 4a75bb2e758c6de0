//! Population / perturbation / noise decomposition of sample moments.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::index_set;
use crate::linalg::{correlation_from_covariance, inverse_spd, Matrix, SymmetricMatrix, Vector};
use crate::scalar::Scalar;

/// Second moments of the joint vector `(X_1, …, X_M, Y)`: the covariate
/// matrix, the covariate/response vector and the response variance.
///
/// The same shape holds population values, perturbations and noise terms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointMoments<T> {
    pub sigma: SymmetricMatrix<T>,
    pub cov: Vector<T>,
    pub var_y: T,
}

impl<T: Scalar> JointMoments<T> {
    pub fn new(sigma: SymmetricMatrix<T>, cov: Vector<T>, var_y: T) -> Result<Self> {
        if sigma.dim() != cov.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} covariate block with a length-{} response vector",
                sigma.dim(),
                sigma.dim(),
                cov.len()
            )));
        }
        if !var_y.is_finite() {
            return Err(Error::NonFinite {
                row: cov.len(),
                col: cov.len(),
            });
        }
        Ok(Self { sigma, cov, var_y })
    }

    pub fn zeros(m: usize) -> Self {
        Self {
            sigma: SymmetricMatrix::zeros(m),
            cov: Vector::zeros(m),
            var_y: T::zero(),
        }
    }

    /// Splits an `(M+1)`-dimensional joint matrix whose last index is `Y`.
    pub fn from_joint(joint: &SymmetricMatrix<T>) -> Result<Self> {
        let n = joint.dim();
        if n < 2 {
            return Err(Error::DegenerateInput(
                "joint matrix needs at least one covariate and the response".into(),
            ));
        }
        let m = n - 1;
        let idx: Vec<usize> = (0..m).collect();
        Self::new(
            joint.principal(&idx),
            joint.matrix().column(m).select(&idx),
            joint.get(m, m),
        )
    }

    /// Number of covariates `M`.
    pub fn dim(&self) -> usize {
        self.cov.len()
    }

    /// `[[Σ, Cov], [Covᵀ, var_y]]`.
    pub fn joint(&self) -> SymmetricMatrix<T> {
        let m = self.dim();
        SymmetricMatrix::from_lower_fn(m + 1, |i, j| match (i == m, j == m) {
            (true, true) => self.var_y,
            (true, false) => self.cov[j],
            (false, true) => self.cov[i],
            (false, false) => self.sigma.get(i, j),
        })
    }

    pub fn sub(&self, other: &JointMoments<T>) -> Result<JointMoments<T>> {
        JointMoments::new(
            self.sigma.sub(&other.sigma)?,
            self.cov.sub(&other.cov)?,
            self.var_y - other.var_y,
        )
    }

    pub fn add(&self, other: &JointMoments<T>) -> Result<JointMoments<T>> {
        JointMoments::new(
            self.sigma.add(&other.sigma)?,
            self.cov.add(&other.cov)?,
            self.var_y + other.var_y,
        )
    }

    /// Joint correlation matrix, re-split.
    pub fn to_correlation(&self) -> Result<JointMoments<T>> {
        Self::from_joint(&correlation_from_covariance(&self.joint())?)
    }

    /// Frobenius norm of the joint matrix.
    pub fn joint_frobenius(&self) -> T {
        self.joint().frobenius_norm()
    }
}

/// Noise and perturbation blocks relative to a known population, with the
/// starred assemblies for a discard block `D`.
///
/// Starred matrices are `|D| x (1 + |D^c|)`: column 0 holds the response
/// vector part restricted to `D`, the remaining columns the `[D, D^c]` block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationSplit<T> {
    pub d_set: Vec<usize>,
    pub dc_set: Vec<usize>,
    pub population: JointMoments<T>,
    /// Sampling noise of the unperturbed sample.
    pub h: JointMoments<T>,
    /// Sparse deterministic perturbation between the two populations.
    pub e: JointMoments<T>,
    /// Sampling noise of the perturbed sample.
    pub e_tilde: JointMoments<T>,
    pub h_star: Matrix<T>,
    pub e_star: Matrix<T>,
    pub e_tilde_star: Matrix<T>,
    /// `(1, -(Σ⁻¹)[D^c,D^c] Cov[D^c])`.
    pub cov_star: Vector<T>,
    /// `(Σ⁻¹)[D,D]`; row `k` is `(Σ⁻¹)[d_k, D]`.
    pub sigma_inv_dd: Matrix<T>,
}

/// Offending joint positions where a perturbation touches a nonzero population entry.
fn sparsity_violations<T: Scalar>(
    population: &SymmetricMatrix<T>,
    perturbation: &SymmetricMatrix<T>,
) -> Vec<(usize, usize)> {
    let n = population.dim();
    let mut bad = Vec::new();
    for i in 0..n {
        for j in i..n {
            if perturbation.get(i, j) != T::zero() && population.get(i, j) != T::zero() {
                bad.push((i, j));
            }
        }
    }
    bad
}

fn starred<T: Scalar>(noise: &JointMoments<T>, d_set: &[usize], dc_set: &[usize]) -> Matrix<T> {
    Matrix::from_fn(d_set.len(), 1 + dc_set.len(), |r, c| {
        let d = d_set[r];
        if c == 0 {
            noise.cov[d]
        } else {
            noise.sigma.get(d, dc_set[c - 1])
        }
    })
}

impl<T: Scalar> PerturbationSplit<T> {
    /// `(E* + Ẽ*)`.
    pub fn perturbed_star(&self) -> Matrix<T> {
        self.e_star
            .add(&self.e_tilde_star)
            .expect("starred blocks share a shape")
    }

    /// `(Σ⁻¹)[d_k, D] · star` for the `k`-th member of `D`.
    pub fn project(&self, k: usize, star: &Matrix<T>) -> Vector<T> {
        let row = self.sigma_inv_dd.row(k);
        let cols = star.cols();
        let values = (0..cols)
            .map(|c| {
                row.iter()
                    .enumerate()
                    .fold(T::zero(), |acc, (r, &w)| acc + w * star.get(r, c))
            })
            .collect();
        Vector::new(values).expect("finite projection")
    }

    /// `(Σ⁻¹)[d_k, D] · star · Cov*`.
    pub fn sandwich(&self, k: usize, star: &Matrix<T>) -> T {
        self.project(k, star).dot(&self.cov_star)
    }

    /// Row norms `‖star[d*, ·]‖₂` for every `d* ∈ D`.
    pub fn row_norms(star: &Matrix<T>) -> Vec<T> {
        (0..star.rows())
            .map(|r| star.row_norm(r).expect("row in range"))
            .collect()
    }
}

/// Decomposes two sample moment sets against a known population.
///
/// `H = Ŝ − S`, `Ẽ = (S̃ − S) − E` for the covariate matrix, the response
/// vector and the response variance alike. The perturbation must vanish
/// wherever the population is nonzero (exact comparison).
pub fn split_known_population<T: Scalar>(
    population: &JointMoments<T>,
    perturbation: &JointMoments<T>,
    sample: &JointMoments<T>,
    sample_tilde: &JointMoments<T>,
    d_set: &[usize],
) -> Result<PerturbationSplit<T>> {
    let m = population.dim();
    for (name, other) in [
        ("perturbation", perturbation),
        ("sample", sample),
        ("perturbed sample", sample_tilde),
    ] {
        if other.dim() != m {
            return Err(Error::DimensionMismatch(format!(
                "{name} has {} covariates, population has {m}",
                other.dim()
            )));
        }
    }
    let d_set = index_set::proper_subset(d_set, m)?;
    let dc_set = index_set::complement(&d_set, m);

    let bad = sparsity_violations(&population.joint(), &perturbation.joint());
    if !bad.is_empty() {
        return Err(Error::Structural(format!(
            "perturbation is nonzero where the population is nonzero at joint positions {bad:?}"
        )));
    }

    let h = sample.sub(population)?;
    let e_tilde = sample_tilde.sub(population)?.sub(perturbation)?;
    let e = perturbation.clone();

    let sigma_inv = inverse_spd(&population.sigma)?;
    let inv_dcdc = sigma_inv.block(&dc_set, &dc_set);
    let weighted = inv_dcdc.mul_vec(&population.cov.select(&dc_set))?;
    let mut cov_star = Vec::with_capacity(1 + dc_set.len());
    cov_star.push(T::one());
    cov_star.extend(weighted.iter().map(|&v| -v));

    Ok(PerturbationSplit {
        h_star: starred(&h, &d_set, &dc_set),
        e_star: starred(&e, &d_set, &dc_set),
        e_tilde_star: starred(&e_tilde, &d_set, &dc_set),
        cov_star: Vector::new(cov_star)?,
        sigma_inv_dd: sigma_inv.block(&d_set, &d_set),
        population: population.clone(),
        h,
        e,
        e_tilde,
        d_set,
        dc_set,
    })
}

/// Correlation-scale counterpart of [`PerturbationSplit`].
///
/// `scaled` holds the daggered assemblies built from joint correlation
/// matrices (`P_Y`, `E^ρ`, `H^ρ`, `Ẽ^ρ`, with `corr†` as its `cov_star`);
/// `covariance` is the covariance-scale split of the same inputs, used by the
/// literal reading of the correlation conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationSplit<T> {
    pub scaled: PerturbationSplit<T>,
    pub covariance: PerturbationSplit<T>,
}

/// Builds both the covariance split and its correlation-scale counterpart.
///
/// Each joint matrix is converted to a correlation matrix first: `P_Y` from
/// the population, `P̃_Y` from population plus perturbation, and the two
/// sample correlation matrices. Then `E^ρ = P̃_Y − P_Y`, `H^ρ = ρ̂_Y − P_Y`
/// and `Ẽ^ρ = ρ̂̃_Y − P_Y − E^ρ`.
pub fn split_correlation<T: Scalar>(
    population: &JointMoments<T>,
    perturbation: &JointMoments<T>,
    sample: &JointMoments<T>,
    sample_tilde: &JointMoments<T>,
    d_set: &[usize],
) -> Result<CorrelationSplit<T>> {
    let covariance = split_known_population(population, perturbation, sample, sample_tilde, d_set)?;
    let p = population.to_correlation()?;
    let p_tilde = population.add(perturbation)?.to_correlation()?;
    let e_rho = p_tilde.sub(&p)?;
    let scaled = split_known_population(
        &p,
        &e_rho,
        &sample.to_correlation()?,
        &sample_tilde.to_correlation()?,
        d_set,
    )?;
    Ok(CorrelationSplit { scaled, covariance })
}
