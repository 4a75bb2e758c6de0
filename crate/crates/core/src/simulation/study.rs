use rayon::prelude::*;
use serde::Serialize;

use super::population::{sample_gaussian, PopulationSpec};
use super::rng::{SeededRng, TrialRng};
use crate::error::{Error, Result};
use crate::linalg::{correlation_from_covariance, eigh, sample_covariance, Matrix};
use crate::ols::{approx_coefficients, ols_discard_set, ols_fit};
use crate::perturbation::{
    check_corr_angle_condition, check_corr_norm_condition, convergence_rate_estimate,
    evaluate_conditions, split_correlation, split_known_population, tau_bounds, tau_bounds_corr,
    BoundConstant, CorrelationOperands, JointMoments, PerturbationSplit, TauBounds,
};
use crate::pla::{match_eigen_to_block, run_pla, Basis, PlaReport};

/// Largest automatically chosen cut-off.
pub const AUTO_TAU_MAX: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TauChoice {
    Fixed(f64),
    /// Midpoint of the feasible bound interval, else its lower end, capped at
    /// [`AUTO_TAU_MAX`].
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialConfig {
    pub basis: Basis,
    pub tau: TauChoice,
    pub alpha: f64,
    pub constant: BoundConstant,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            basis: Basis::Covariance,
            tau: TauChoice::Auto,
            alpha: 0.05,
            constant: BoundConstant::TwoThirds,
        }
    }
}

/// Implications that must never fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ImplicationViolations {
    /// Angle condition without the ratio condition.
    pub angle_without_ratio: bool,
    /// Ratio condition with `|β_approx| < |β̃_approx|` for some `d`.
    pub ratio_without_coefficient_order: bool,
    /// Angle condition without the norm condition.
    pub angle_without_norm: bool,
    /// Correlation angle condition without the correlation norm condition.
    pub corr_angle_without_corr_norm: bool,
}

impl ImplicationViolations {
    pub fn any(&self) -> bool {
        self.angle_without_ratio
            || self.ratio_without_coefficient_order
            || self.angle_without_norm
            || self.corr_angle_without_corr_norm
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub n_index: usize,
    pub replication: usize,
    pub n: usize,
    pub tau: f64,
    /// Covariates in PLA blocks that do not contain the response.
    pub pla_discards: Vec<usize>,
    /// Every member of `D` is discarded by PLA.
    pub pla_recovers_d: bool,
    pub ols_coefficients: Vec<f64>,
    pub ols_p_values: Vec<f64>,
    pub ols_discards: Vec<usize>,
    /// Every member of `D` is discarded by OLS.
    pub ols_discards_d: bool,
    pub ratio_holds: bool,
    pub angle_holds: bool,
    pub norm_holds: bool,
    pub corr_angle_holds: bool,
    pub corr_norm_holds: bool,
    pub ratios: Vec<Option<f64>>,
    pub cos_angles: Vec<Option<f64>>,
    pub approx_noise: Vec<f64>,
    pub approx_perturbed: Vec<f64>,
    /// Mean over `D` of `|β̂_d − β_approx,d|`.
    pub approx_error: f64,
    pub bounds_feasible: bool,
    pub aggregate_lower: f64,
    pub aggregate_upper: f64,
    pub aggregate_upper_necessary: f64,
    pub loose_upper: f64,
    /// `‖H_Y‖_F`.
    pub h_norm: f64,
    /// `‖Ẽ_Y‖_F`.
    pub e_tilde_norm: f64,
    /// `‖H^ρ_Y‖_F`.
    pub h_rho_norm: f64,
    /// `max |Σ̂_Y − Σ_Y|`.
    pub max_sigma_deviation: f64,
    pub h_star_row_norms: Vec<f64>,
    pub perturbed_star_row_norms: Vec<f64>,
    pub violations: ImplicationViolations,
}

/// Population quantities shared by every trial.
#[derive(Debug, Clone)]
struct Prepared {
    population: JointMoments<f64>,
    perturbation: JointMoments<f64>,
    delta_cov: Vec<usize>,
    eigen_cov: Vec<f64>,
    delta_corr: Vec<usize>,
    eigen_corr: Vec<f64>,
}

fn prepare(spec: &PopulationSpec) -> Result<Prepared> {
    let joint = spec.joint();
    let eig = eigh(&joint)?;
    let eig_corr = eigh(&correlation_from_covariance(&joint)?)?;
    Ok(Prepared {
        population: spec.population(),
        perturbation: spec.perturbation(),
        delta_cov: match_eigen_to_block(&eig, &spec.d_set, 0.0)?,
        eigen_cov: eig.eigenvalues().to_vec(),
        delta_corr: match_eigen_to_block(&eig_corr, &spec.d_set, 0.0)?,
        eigen_corr: eig_corr.eigenvalues().to_vec(),
    })
}

/// τ chosen from the bounds: midpoint when feasible, else the lower bound.
pub fn auto_tau(bounds: &TauBounds<f64>) -> f64 {
    let t = if bounds.feasible {
        0.5 * (bounds.aggregate_lower + bounds.aggregate_upper)
    } else {
        bounds.aggregate_lower
    };
    if t.is_nan() {
        AUTO_TAU_MAX
    } else {
        t.clamp(0.0, AUTO_TAU_MAX)
    }
}

/// Covariates in PLA blocks not containing the response column `m`.
pub fn covariate_discards(report: &PlaReport<f64>, m: usize) -> Vec<usize> {
    let mut out: Vec<usize> = report
        .candidates
        .iter()
        .filter(|c| !c.discard_set.contains(&m))
        .flat_map(|c| c.discard_set.iter().copied())
        .collect();
    out.sort_unstable();
    out
}

fn run_prepared(
    spec: &PopulationSpec,
    prepared: &Prepared,
    n: usize,
    config: &TrialConfig,
    mut rng: TrialRng,
) -> Result<TrialOutcome> {
    let m = spec.m();
    if n <= m + 1 {
        return Err(Error::InsufficientData {
            rows: n,
            cols: m + 1,
        });
    }
    let base = sample_gaussian(spec, n, false, &mut rng.base)?;
    let perturbed = sample_gaussian(spec, n, true, &mut rng.perturbed)?;
    let sample = sample_moments(&base)?;
    let sample_tilde = sample_moments(&perturbed)?;

    let split = split_known_population(
        &prepared.population,
        &prepared.perturbation,
        &sample,
        &sample_tilde,
        &spec.d_set,
    )?;
    let corr = split_correlation(
        &prepared.population,
        &prepared.perturbation,
        &sample,
        &sample_tilde,
        &spec.d_set,
    )?;
    let conditions = evaluate_conditions(&split);
    let corr_angle = check_corr_angle_condition(&corr, CorrelationOperands::ProofConsistent);
    let corr_norm = check_corr_norm_condition(&corr);
    let approx = approx_coefficients(&split)?;

    let bounds = match config.basis {
        Basis::Covariance => tau_bounds(
            &split,
            &prepared.eigen_cov,
            &prepared.delta_cov,
            config.constant,
        )?,
        Basis::Correlation => tau_bounds_corr(
            &corr,
            &prepared.eigen_corr,
            &prepared.delta_corr,
            config.constant,
            CorrelationOperands::ProofConsistent,
        )?,
    };
    let tau = match config.tau {
        TauChoice::Fixed(t) => t,
        TauChoice::Auto => auto_tau(&bounds),
    };
    let pla = run_pla(&base, config.basis, tau)?;
    let pla_discards = covariate_discards(&pla, m);

    let x = base.select(
        &(0..base.rows()).collect::<Vec<_>>(),
        &(0..m).collect::<Vec<_>>(),
    );
    let y = base.column(m);
    let fit = ols_fit(&x, &y)?;
    let ols_discards = ols_discard_set(&fit, config.alpha)?;

    let approx_error = spec
        .d_set
        .iter()
        .zip(&approx.noise)
        .map(|(&d, &a)| (fit.coefficients[d] - a).abs())
        .sum::<f64>()
        / spec.d_set.len() as f64;

    let ratio = &conditions.ratio;
    let violations = ImplicationViolations {
        angle_without_ratio: conditions.angle.holds && !ratio.holds,
        ratio_without_coefficient_order: ratio.holds
            && approx
                .noise
                .iter()
                .zip(&approx.perturbed)
                .any(|(a, b)| a.abs() < b.abs()),
        angle_without_norm: conditions.angle.holds && !conditions.norm.holds,
        corr_angle_without_corr_norm: corr_angle.holds && !corr_norm.holds,
    };

    Ok(TrialOutcome {
        n_index: rng.n_index,
        replication: rng.replication,
        n,
        tau,
        pla_recovers_d: spec.d_set.iter().all(|d| pla_discards.contains(d)),
        pla_discards,
        ols_discards_d: spec.d_set.iter().all(|d| ols_discards.contains(d)),
        ols_coefficients: fit.coefficients.clone(),
        ols_p_values: fit.p_values.clone(),
        ols_discards,
        ratio_holds: ratio.holds,
        angle_holds: conditions.angle.holds,
        norm_holds: conditions.norm.holds,
        corr_angle_holds: corr_angle.holds,
        corr_norm_holds: corr_norm.holds,
        ratios: ratio.ratios.clone(),
        cos_angles: conditions.angle.cos_angles.clone(),
        approx_noise: approx.noise,
        approx_perturbed: approx.perturbed,
        approx_error,
        bounds_feasible: bounds.feasible,
        aggregate_lower: bounds.aggregate_lower,
        aggregate_upper: bounds.aggregate_upper,
        aggregate_upper_necessary: bounds.aggregate_upper_necessary,
        loose_upper: bounds.loose_upper,
        h_norm: split.h.joint_frobenius(),
        e_tilde_norm: split.e_tilde.joint_frobenius(),
        h_rho_norm: corr.scaled.h.joint_frobenius(),
        max_sigma_deviation: split.h.joint().max_abs(),
        h_star_row_norms: PerturbationSplit::row_norms(&split.h_star),
        perturbed_star_row_norms: PerturbationSplit::row_norms(&split.perturbed_star()),
        violations,
    })
}

/// τ-bounds for a known population together with the matched eigenpairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecBounds {
    pub basis: Basis,
    pub d_set: Vec<usize>,
    pub delta_set: Vec<usize>,
    pub eigenvalues: Vec<f64>,
    pub bounds: TauBounds<f64>,
}

/// Bounds of `spec` against a pair of sample moments. With `samples = None`
/// the samples are the population and its perturbed counterpart, so the
/// estimation noise vanishes and only the perturbation remains.
pub fn spec_bounds(
    spec: &PopulationSpec,
    basis: Basis,
    constant: BoundConstant,
    operands: CorrelationOperands,
    samples: Option<(&JointMoments<f64>, &JointMoments<f64>)>,
) -> Result<SpecBounds> {
    let prepared = prepare(spec)?;
    let perturbed = spec.perturbed();
    let (sample, sample_tilde) = samples.unwrap_or((&prepared.population, &perturbed));
    let (delta_set, eigenvalues, bounds) = match basis {
        Basis::Covariance => {
            let split = split_known_population(
                &prepared.population,
                &prepared.perturbation,
                sample,
                sample_tilde,
                &spec.d_set,
            )?;
            let b = tau_bounds(&split, &prepared.eigen_cov, &prepared.delta_cov, constant)?;
            (prepared.delta_cov, prepared.eigen_cov, b)
        }
        Basis::Correlation => {
            let corr = split_correlation(
                &prepared.population,
                &prepared.perturbation,
                sample,
                sample_tilde,
                &spec.d_set,
            )?;
            let b = tau_bounds_corr(
                &corr,
                &prepared.eigen_corr,
                &prepared.delta_corr,
                constant,
                operands,
            )?;
            (prepared.delta_corr, prepared.eigen_corr, b)
        }
    };
    Ok(SpecBounds {
        basis,
        d_set: spec.d_set.clone(),
        delta_set,
        eigenvalues,
        bounds,
    })
}

/// Sample moments of a mean-centred joint sample.
pub fn sample_moments(data: &Matrix<f64>) -> Result<JointMoments<f64>> {
    JointMoments::from_joint(&sample_covariance(data)?)
}

/// One replication: base and perturbed samples from their own streams, both
/// splits against the known population, PLA on the joint base sample and OLS
/// of the response on the covariates.
pub fn run_trial(
    spec: &PopulationSpec,
    n: usize,
    config: &TrialConfig,
    rng: TrialRng,
) -> Result<TrialOutcome> {
    run_prepared(spec, &prepare(spec)?, n, config, rng)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ViolationCounts {
    pub angle_without_ratio: usize,
    pub ratio_without_coefficient_order: usize,
    pub angle_without_norm: usize,
    pub corr_angle_without_corr_norm: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSizeSummary {
    pub n: usize,
    pub replications: usize,
    pub mean_h_norm: f64,
    pub mean_h_rho_norm: f64,
    pub mean_e_tilde_norm: f64,
    pub mean_approx_error: f64,
    pub mean_max_sigma_deviation: f64,
    pub freq_ratio: f64,
    pub freq_angle: f64,
    pub freq_norm: f64,
    pub freq_corr_angle: f64,
    pub freq_corr_norm: f64,
    pub freq_bounds_feasible: f64,
    pub freq_pla_recovers_d: f64,
    pub freq_ols_discards_d: f64,
    pub freq_both_discard_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudySummary {
    pub per_n: Vec<SampleSizeSummary>,
    /// Log-log slopes against `N`; `None` with fewer than three sample sizes.
    pub h_norm_slope: Option<f64>,
    pub h_rho_norm_slope: Option<f64>,
    pub approx_error_slope: Option<f64>,
    pub violations: ViolationCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Study {
    pub trials: Vec<TrialOutcome>,
    pub summary: StudySummary,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    sum / count as f64
}

fn frequency<'a>(trials: &'a [&'a TrialOutcome], f: impl Fn(&TrialOutcome) -> bool) -> f64 {
    trials.iter().filter(|t| f(t)).count() as f64 / trials.len() as f64
}

fn slope(trials: &[TrialOutcome], f: impl Fn(&TrialOutcome) -> f64) -> Option<f64> {
    let points: Vec<(usize, f64)> = trials.iter().map(|t| (t.n, f(t))).collect();
    convergence_rate_estimate(&points).ok()
}

pub fn summarize(n_list: &[usize], trials: &[TrialOutcome]) -> StudySummary {
    let per_n = n_list
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let group: Vec<&TrialOutcome> = trials.iter().filter(|t| t.n_index == i).collect();
            SampleSizeSummary {
                n,
                replications: group.len(),
                mean_h_norm: mean(group.iter().map(|t| t.h_norm)),
                mean_h_rho_norm: mean(group.iter().map(|t| t.h_rho_norm)),
                mean_e_tilde_norm: mean(group.iter().map(|t| t.e_tilde_norm)),
                mean_approx_error: mean(group.iter().map(|t| t.approx_error)),
                mean_max_sigma_deviation: mean(group.iter().map(|t| t.max_sigma_deviation)),
                freq_ratio: frequency(&group, |t| t.ratio_holds),
                freq_angle: frequency(&group, |t| t.angle_holds),
                freq_norm: frequency(&group, |t| t.norm_holds),
                freq_corr_angle: frequency(&group, |t| t.corr_angle_holds),
                freq_corr_norm: frequency(&group, |t| t.corr_norm_holds),
                freq_bounds_feasible: frequency(&group, |t| t.bounds_feasible),
                freq_pla_recovers_d: frequency(&group, |t| t.pla_recovers_d),
                freq_ols_discards_d: frequency(&group, |t| t.ols_discards_d),
                freq_both_discard_d: frequency(&group, |t| t.pla_recovers_d && t.ols_discards_d),
            }
        })
        .collect();
    let mut violations = ViolationCounts::default();
    for t in trials {
        let v = &t.violations;
        violations.angle_without_ratio += v.angle_without_ratio as usize;
        violations.ratio_without_coefficient_order += v.ratio_without_coefficient_order as usize;
        violations.angle_without_norm += v.angle_without_norm as usize;
        violations.corr_angle_without_corr_norm += v.corr_angle_without_corr_norm as usize;
        violations.total += v.any() as usize;
    }
    StudySummary {
        per_n,
        h_norm_slope: slope(trials, |t| t.h_norm),
        h_rho_norm_slope: slope(trials, |t| t.h_rho_norm),
        approx_error_slope: slope(trials, |t| t.approx_error),
        violations,
    }
}

/// Runs every `(sample size, replication)` pair on `parallelism` threads
/// (`0` picks the machine default). Results are ordered by index, so output
/// does not depend on scheduling.
pub fn run_study(
    spec: &PopulationSpec,
    n_list: &[usize],
    replications: usize,
    config: &TrialConfig,
    rng: &SeededRng,
    parallelism: usize,
) -> Result<Study> {
    if replications == 0 {
        return Err(Error::InvalidParameter(
            "replications must be at least 1".into(),
        ));
    }
    if n_list.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one sample size is required".into(),
        ));
    }
    let prepared = prepare(spec)?;
    let jobs: Vec<(usize, usize)> = (0..n_list.len())
        .flat_map(|i| (0..replications).map(move |r| (i, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let trials = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, r)| run_prepared(spec, &prepared, n_list[i], config, rng.trial(i, r)))
            .collect::<Result<Vec<_>>>()
    })?;
    let summary = summarize(n_list, &trials);
    Ok(Study { trials, summary })
}
