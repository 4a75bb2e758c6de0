use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::rng::{SeededRng, POPULATION_STREAM};
use crate::error::{Error, Result};
use crate::linalg::{
    correlation_from_covariance, mean_center, Cholesky, Matrix, SymmetricMatrix, Vector,
};
use crate::perturbation::JointMoments;

/// Attempts at drawing positive-definite population blocks.
pub const MAX_POPULATION_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    /// Each block is `BBᵀ/k + I/2` for a standard normal `k x k` matrix `B`.
    #[default]
    Random,
    /// Identity blocks.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationParams {
    pub m: usize,
    /// `D` is the first `d_size` covariates.
    pub d_size: usize,
    /// `‖β‖₂` (or `√(βᵀΣβ)` with unit variances).
    pub signal: f64,
    /// Magnitude of the perturbation entries.
    pub perturb_eps: f64,
    /// Also perturb `Cov` at the first member of `D`.
    pub perturb_cov: bool,
    pub structure: Structure,
    /// Unit diagonal for `Σ` and `Var(Y) = 1`; requires `signal < 1`.
    pub unit_variance: bool,
}

impl Default for PopulationParams {
    fn default() -> Self {
        Self {
            m: 4,
            d_size: 1,
            signal: 1.0,
            perturb_eps: 0.05,
            perturb_cov: false,
            structure: Structure::Random,
            unit_variance: false,
        }
    }
}

/// Population with `Σ[D, D^c] = 0` and `Cov[D] = 0`, and a sparse perturbation
/// supported where the population vanishes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationSpec {
    pub params: PopulationParams,
    pub d_set: Vec<usize>,
    pub dc_set: Vec<usize>,
    pub sigma: SymmetricMatrix<f64>,
    pub cov: Vector<f64>,
    pub var_y: f64,
    pub e: SymmetricMatrix<f64>,
    pub e_cov: Vector<f64>,
    /// `Σ⁻¹ Cov`.
    pub beta_true: Vector<f64>,
}

impl PopulationSpec {
    pub fn m(&self) -> usize {
        self.params.m
    }

    pub fn population(&self) -> JointMoments<f64> {
        JointMoments {
            sigma: self.sigma.clone(),
            cov: self.cov.clone(),
            var_y: self.var_y,
        }
    }

    pub fn perturbation(&self) -> JointMoments<f64> {
        JointMoments {
            sigma: self.e.clone(),
            cov: self.e_cov.clone(),
            var_y: 0.0,
        }
    }

    pub fn perturbed(&self) -> JointMoments<f64> {
        self.population()
            .add(&self.perturbation())
            .expect("perturbation shares the population shape")
    }

    /// `Σ_Y`.
    pub fn joint(&self) -> SymmetricMatrix<f64> {
        self.population().joint()
    }

    /// `Σ̃_Y`.
    pub fn perturbed_joint(&self) -> SymmetricMatrix<f64> {
        self.perturbed().joint()
    }
}

fn validate(p: &PopulationParams) -> Result<()> {
    if p.m < 2 || p.d_size == 0 || p.d_size >= p.m {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= d_size < m with m >= 2, got d_size = {}, m = {}",
            p.d_size, p.m
        )));
    }
    if !(p.signal.is_finite() && p.signal >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "signal must be finite and non-negative, got {}",
            p.signal
        )));
    }
    if !(p.perturb_eps.is_finite() && p.perturb_eps >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "perturbation must be finite and non-negative, got {}",
            p.perturb_eps
        )));
    }
    if p.unit_variance && p.signal >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "unit-variance populations need signal < 1, got {}",
            p.signal
        )));
    }
    Ok(())
}

fn draw_block<R: Rng>(
    k: usize,
    params: &PopulationParams,
    rng: &mut R,
) -> Result<SymmetricMatrix<f64>> {
    let block = match params.structure {
        Structure::Identity => SymmetricMatrix::identity(k),
        Structure::Random => {
            let b = Matrix::from_fn(k, k, |_, _| rng.sample::<f64, _>(StandardNormal));
            let kf = k as f64;
            SymmetricMatrix::from_lower_fn(k, |i, j| {
                let dot: f64 = (0..k).map(|t| b.get(i, t) * b.get(j, t)).sum();
                dot / kf + if i == j { 0.5 } else { 0.0 }
            })
        }
    };
    if params.unit_variance {
        correlation_from_covariance(&block)
    } else {
        Ok(block)
    }
}

fn attempt<R: Rng>(params: &PopulationParams, rng: &mut R) -> Result<PopulationSpec> {
    let m = params.m;
    let d_set: Vec<usize> = (0..params.d_size).collect();
    let dc_set: Vec<usize> = (params.d_size..m).collect();
    let s_d = draw_block(d_set.len(), params, rng)?;
    let s_dc = draw_block(dc_set.len(), params, rng)?;
    let k = dc_set.len();

    let sigma =
        SymmetricMatrix::from_lower_fn(m, |i, j| match (i < params.d_size, j < params.d_size) {
            (true, true) => s_d.get(i, j),
            (false, false) => s_dc.get(i - params.d_size, j - params.d_size),
            _ => 0.0,
        });

    let raw: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
    let mut u = Vector::new(raw)?;
    if u.norm() == 0.0 {
        u = Vector::new((0..k).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect())?;
    }
    let (beta_dc, var_y) = if params.unit_variance {
        let quad = u.dot(&s_dc.mul_vec(&u)?);
        let beta = u.scale(params.signal / quad.sqrt());
        (beta, 1.0)
    } else {
        let beta = u.scale(params.signal / u.norm());
        let explained = beta.dot(&s_dc.mul_vec(&beta)?);
        (beta, explained + 1.0)
    };
    let cov_dc = s_dc.mul_vec(&beta_dc)?;
    let mut cov = vec![0.0; m];
    let mut beta_true = vec![0.0; m];
    for (i, &c) in dc_set.iter().enumerate() {
        cov[c] = cov_dc[i];
        beta_true[c] = beta_dc[i];
    }

    let (d0, c0) = (d_set[0], dc_set[0]);
    let eps = params.perturb_eps;
    let e = SymmetricMatrix::from_lower_fn(m, |i, j| {
        if (i, j) == (c0, d0) || (i, j) == (d0, c0) {
            eps
        } else {
            0.0
        }
    });
    let mut e_cov = vec![0.0; m];
    if params.perturb_cov {
        e_cov[d0] = eps;
    }

    let spec = PopulationSpec {
        params: params.clone(),
        d_set,
        dc_set,
        sigma,
        cov: Vector::new(cov)?,
        var_y,
        e,
        e_cov: Vector::new(e_cov)?,
        beta_true: Vector::new(beta_true)?,
    };
    Cholesky::new(&spec.joint())?;
    Cholesky::new(&spec.perturbed_joint())?;
    Ok(spec)
}

/// Draws a block-structured population, retrying until both the joint and
/// the perturbed joint matrices are well-conditioned positive definite.
pub fn make_population(params: &PopulationParams, seed: u64) -> Result<PopulationSpec> {
    validate(params)?;
    let rng = SeededRng::new(seed);
    let mut last = None;
    for n in 0..MAX_POPULATION_ATTEMPTS {
        let mut stream = rng.stream(&[POPULATION_STREAM, n as u64]);
        match attempt(params, &mut stream) {
            Ok(spec) => return Ok(spec),
            Err(e @ (Error::Singular { .. } | Error::DegenerateVariance { .. })) => last = Some(e),
            Err(e) => return Err(e),
        }
        if params.structure == Structure::Identity {
            break;
        }
    }
    Err(Error::NumericalFailure(format!(
        "no positive-definite population after {MAX_POPULATION_ATTEMPTS} attempts (last: {})",
        last.map(|e| e.to_string()).unwrap_or_default()
    )))
}

/// `n` IID draws of `(X, Y)` from `N(0, Σ_Y)` (or `N(0, Σ̃_Y)`), mean-centred.
///
/// Rows are `L z` with `L` the Cholesky factor and `z` standard normal
/// (ziggurat sampling on the given stream).
pub fn sample_gaussian<R: Rng>(
    spec: &PopulationSpec,
    n: usize,
    perturbed: bool,
    rng: &mut R,
) -> Result<Matrix<f64>> {
    let joint = if perturbed {
        spec.perturbed_joint()
    } else {
        spec.joint()
    };
    let chol = Cholesky::new(&joint)?;
    let l = chol.factor();
    let p = joint.dim();
    let mut data = Matrix::zeros(n, p);
    let mut z = vec![0.0; p];
    for row in 0..n {
        z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        for i in 0..p {
            let v: f64 = (0..=i).map(|k| l.get(i, k) * z[k]).sum();
            data.set(row, i, v);
        }
    }
    mean_center(&data)
}
