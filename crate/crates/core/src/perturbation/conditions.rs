//! Sufficient conditions and τ-bounds for coinciding OLS and PLA discards.

use std::collections::BTreeMap;

use serde::Serialize;

use super::split::{CorrelationSplit, PerturbationSplit};
use crate::error::{Error, Result};
use crate::linalg::{cosine_angle, Matrix};
use crate::scalar::Scalar;

/// Denominators below this magnitude count as zero in the ratio condition.
pub const RATIO_ZERO: f64 = 1e-14;

/// Eigengaps at or below this fraction of the largest `|λ|` count as ties.
pub const GAP_TIE: f64 = 1e-12;

/// Ratio condition per `d ∈ D`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioCheck<T> {
    pub numerators: Vec<T>,
    pub denominators: Vec<T>,
    /// `None` where the denominator vanishes.
    pub ratios: Vec<Option<T>>,
    pub per_d: Vec<bool>,
    pub holds: bool,
}

/// Row-norm condition per `(d, d*)`: `lhs[k][j] <= rhs[k][j]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleCheck<T> {
    /// `|cos|` per `d`; `None` when an operand has zero norm.
    pub cos_angles: Vec<Option<T>>,
    pub lhs: Vec<Vec<T>>,
    pub rhs: Vec<Vec<T>>,
    pub degenerate_angle: bool,
    pub holds: bool,
}

/// Row-norm condition without the angle factor, per `d*`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormCheck<T> {
    pub lhs: Vec<T>,
    pub rhs: Vec<T>,
    pub holds: bool,
}

/// All covariance-scale conditions for one split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport<T> {
    pub ratio: RatioCheck<T>,
    pub angle: AngleCheck<T>,
    pub norm: NormCheck<T>,
}

/// Which operands enter the correlation-scale angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationOperands {
    /// `P⁻¹` and `corr`, matching the correlation-scale approximation.
    #[default]
    ProofConsistent,
    /// `Σ⁻¹` and `Cov`, with the covariance angle in the τ-bound.
    Literal,
}

/// Multiplier in the τ-bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BoundConstant {
    /// `2^(2/3)`.
    TwoThirds,
    /// `2^(3/2)`, the Davis–Kahan style constant.
    DavisKahan,
    Custom(f64),
}

impl BoundConstant {
    pub fn value<T: Scalar>(self) -> T {
        T::of(match self {
            BoundConstant::TwoThirds => 2f64.powf(2.0 / 3.0),
            BoundConstant::DavisKahan => 2f64.powf(1.5),
            BoundConstant::Custom(c) => c,
        })
    }
}

/// One `(d, d*, δ)` combination of τ-bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundTuple<T> {
    pub d: usize,
    pub d_star: usize,
    pub delta: usize,
    pub gap: T,
    pub lower: T,
    pub upper_tight: T,
    pub upper_necessary: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauBounds<T> {
    pub constant: T,
    pub tuples: Vec<BoundTuple<T>>,
    pub aggregate_lower: T,
    pub aggregate_upper: T,
    pub aggregate_upper_necessary: T,
    /// Minimum over `δ` of the loose upper bound.
    pub loose_upper: T,
    pub feasible: bool,
    pub necessary_feasible: bool,
    pub loose_feasible: bool,
    /// Members of `D` whose angle was undefined; their tight bound is zero.
    pub degenerate_angles: Vec<usize>,
    pub infeasible_reason: Option<String>,
}

/// Ratio condition: `|(Σ⁻¹)[d,D](E*+Ẽ*)Cov*| ≤ |(Σ⁻¹)[d,D]H*Cov*|` per `d`.
///
/// With a vanishing denominator the condition holds only if the numerator
/// vanishes too.
pub fn check_ratio_condition<T: Scalar>(split: &PerturbationSplit<T>) -> RatioCheck<T> {
    let zero = T::tol(RATIO_ZERO, 10.0);
    let perturbed = split.perturbed_star();
    let mut check = RatioCheck {
        numerators: Vec::new(),
        denominators: Vec::new(),
        ratios: Vec::new(),
        per_d: Vec::new(),
        holds: true,
    };
    for k in 0..split.d_set.len() {
        let num = split.sandwich(k, &perturbed);
        let den = split.sandwich(k, &split.h_star);
        let (ratio, ok) = if den.abs() < zero {
            (None, num.abs() < zero)
        } else {
            (Some(num / den), num.abs() <= den.abs())
        };
        check.numerators.push(num);
        check.denominators.push(den);
        check.ratios.push(ratio);
        check.per_d.push(ok);
        check.holds &= ok;
    }
    check
}

fn angle_check<T: Scalar>(
    cos_angles: Vec<Option<T>>,
    noise_norms: &[T],
    perturbed_norms: &[T],
) -> AngleCheck<T> {
    let mut check = AngleCheck {
        degenerate_angle: cos_angles.iter().any(Option::is_none),
        cos_angles,
        lhs: Vec::new(),
        rhs: Vec::new(),
        holds: true,
    };
    for cos in &check.cos_angles {
        let rhs: Vec<T> = match cos {
            Some(c) => noise_norms.iter().map(|&n| n * *c).collect(),
            None => vec![T::nan(); noise_norms.len()],
        };
        let ok = cos.is_some() && perturbed_norms.iter().zip(&rhs).all(|(l, r)| l <= r);
        check.holds &= ok;
        check.lhs.push(perturbed_norms.to_vec());
        check.rhs.push(rhs);
    }
    check
}

fn norm_check<T: Scalar>(noise_norms: Vec<T>, perturbed_norms: Vec<T>) -> NormCheck<T> {
    let holds = perturbed_norms
        .iter()
        .zip(&noise_norms)
        .all(|(l, r)| l <= r);
    NormCheck {
        lhs: perturbed_norms,
        rhs: noise_norms,
        holds,
    }
}

/// `|cos θ_d|` between `(Σ⁻¹)[d,D]·H*` and `Cov*`, per `d`.
pub fn angle_cosines<T: Scalar>(split: &PerturbationSplit<T>) -> Vec<Option<T>> {
    projected_cosines(split, &split.h_star)
}

/// `|cos|` between `weights.project(k, star)` and `weights.cov_star`.
fn projected_cosines<T: Scalar>(
    weights: &PerturbationSplit<T>,
    star: &Matrix<T>,
) -> Vec<Option<T>> {
    (0..weights.d_set.len())
        .map(|k| {
            cosine_angle(&weights.project(k, star), &weights.cov_star)
                .ok()
                .map(|c| c.abs())
        })
        .collect()
}

/// Angle condition: `‖(E*+Ẽ*)[d*]‖ ≤ ‖H*[d*]‖·|cos θ_d|` for all `(d, d*)`.
pub fn check_angle_condition<T: Scalar>(split: &PerturbationSplit<T>) -> AngleCheck<T> {
    angle_check(
        angle_cosines(split),
        &PerturbationSplit::row_norms(&split.h_star),
        &PerturbationSplit::row_norms(&split.perturbed_star()),
    )
}

/// Norm condition: `‖(E*+Ẽ*)[d*]‖ ≤ ‖H*[d*]‖` for all `d*`.
pub fn check_norm_condition<T: Scalar>(split: &PerturbationSplit<T>) -> NormCheck<T> {
    norm_check(
        PerturbationSplit::row_norms(&split.h_star),
        PerturbationSplit::row_norms(&split.perturbed_star()),
    )
}

pub fn evaluate_conditions<T: Scalar>(split: &PerturbationSplit<T>) -> ConditionReport<T> {
    ConditionReport {
        ratio: check_ratio_condition(split),
        angle: check_angle_condition(split),
        norm: check_norm_condition(split),
    }
}

/// `|cos φ_d|` for the correlation-scale angle under the chosen operands.
pub fn correlation_cosines<T: Scalar>(
    split: &CorrelationSplit<T>,
    operands: CorrelationOperands,
) -> Vec<Option<T>> {
    let weights = match operands {
        CorrelationOperands::ProofConsistent => &split.scaled,
        CorrelationOperands::Literal => &split.covariance,
    };
    projected_cosines(weights, &split.scaled.h_star)
}

/// Correlation-scale angle condition on the daggered blocks.
pub fn check_corr_angle_condition<T: Scalar>(
    split: &CorrelationSplit<T>,
    operands: CorrelationOperands,
) -> AngleCheck<T> {
    let s = &split.scaled;
    angle_check(
        correlation_cosines(split, operands),
        &PerturbationSplit::row_norms(&s.h_star),
        &PerturbationSplit::row_norms(&s.perturbed_star()),
    )
}

/// Correlation-scale norm condition on the daggered blocks.
pub fn check_corr_norm_condition<T: Scalar>(split: &CorrelationSplit<T>) -> NormCheck<T> {
    check_norm_condition(&split.scaled)
}

/// Positive spectral gap around the `delta`-th eigenvalue (descending order):
/// `min(λ[δ-1] − λ[δ], λ[δ] − λ[δ+1])`, with missing neighbours ignored.
pub fn eigengap<T: Scalar>(eigenvalues: &[T], delta: usize) -> Result<T> {
    if delta >= eigenvalues.len() {
        return Err(Error::IndexOutOfRange {
            index: delta,
            len: eigenvalues.len(),
        });
    }
    let above = if delta == 0 {
        T::infinity()
    } else {
        eigenvalues[delta - 1] - eigenvalues[delta]
    };
    let below = if delta + 1 == eigenvalues.len() {
        T::infinity()
    } else {
        eigenvalues[delta] - eigenvalues[delta + 1]
    };
    Ok(above.min(below))
}

struct BoundInputs<'a, T> {
    d_set: &'a [usize],
    cosines: Vec<Option<T>>,
    noise_row_norms: Vec<T>,
    perturbed_frobenius: T,
    loose_frobenius: T,
}

fn assemble_bounds<T: Scalar>(
    inputs: BoundInputs<'_, T>,
    eigenvalues: &[T],
    delta_set: &[usize],
    constant: BoundConstant,
) -> Result<TauBounds<T>> {
    let m = inputs.d_set.len();
    if delta_set.len() != m {
        return Err(Error::BlockMismatch {
            expected: m,
            found: delta_set.to_vec(),
        });
    }
    let c: T = constant.value();
    let gaps = delta_set
        .iter()
        .map(|&delta| eigengap(eigenvalues, delta))
        .collect::<Result<Vec<T>>>()?;
    let scale = eigenvalues
        .iter()
        .fold(T::zero(), |a, &l| a.max(l.abs()))
        .max(T::min_positive_value());
    let tie = T::tol(GAP_TIE, 100.0) * scale;
    let zero_gaps: Vec<usize> = delta_set
        .iter()
        .zip(&gaps)
        .filter(|(_, g)| !(**g > tie))
        .map(|(d, _)| *d)
        .collect();

    let lower_num = c * inputs.perturbed_frobenius;
    let loose_num = c * inputs.loose_frobenius;
    let mut tuples = Vec::with_capacity(m * m * m);
    let mut degenerate_angles = Vec::new();
    for (k, cos) in inputs.cosines.iter().enumerate() {
        if cos.is_none() {
            degenerate_angles.push(inputs.d_set[k]);
        }
        let cos = cos.unwrap_or_else(T::zero);
        for (j, &norm) in inputs.noise_row_norms.iter().enumerate() {
            for (&delta, &gap) in delta_set.iter().zip(&gaps) {
                tuples.push(BoundTuple {
                    d: inputs.d_set[k],
                    d_star: inputs.d_set[j],
                    delta,
                    gap,
                    lower: lower_num / gap,
                    upper_tight: c * norm * cos / gap,
                    upper_necessary: c * norm / gap,
                });
            }
        }
    }

    let fold_max = |f: fn(&BoundTuple<T>) -> T| {
        tuples
            .iter()
            .map(f)
            .fold(T::neg_infinity(), |a, b| a.max(b))
    };
    let fold_min =
        |f: fn(&BoundTuple<T>) -> T| tuples.iter().map(f).fold(T::infinity(), |a, b| a.min(b));
    let aggregate_lower = fold_max(|t| t.lower);
    let aggregate_upper = fold_min(|t| t.upper_tight);
    let aggregate_upper_necessary = fold_min(|t| t.upper_necessary);
    let loose_upper = gaps
        .iter()
        .map(|&g| loose_num / g)
        .fold(T::infinity(), |a, b| a.min(b));

    let gap_ok = zero_gaps.is_empty();
    let feasible = gap_ok && aggregate_lower <= aggregate_upper;
    let infeasible_reason = if !gap_ok {
        Some(format!("zero eigengap at eigen indices {zero_gaps:?}"))
    } else if !feasible {
        Some("lower bound exceeds the tight upper bound".to_string())
    } else {
        None
    };
    Ok(TauBounds {
        constant: c,
        tuples,
        aggregate_lower,
        aggregate_upper,
        aggregate_upper_necessary,
        loose_upper,
        feasible,
        necessary_feasible: gap_ok && aggregate_lower <= aggregate_upper_necessary,
        loose_feasible: gap_ok && aggregate_lower <= loose_upper,
        degenerate_angles,
        infeasible_reason,
    })
}

/// τ-bounds on the covariance scale.
///
/// `eigenvalues` are those of the joint population matrix `Σ_Y` in descending
/// order; `delta_set` is the eigen set matched to `D`.
pub fn tau_bounds<T: Scalar>(
    split: &PerturbationSplit<T>,
    eigenvalues: &[T],
    delta_set: &[usize],
    constant: BoundConstant,
) -> Result<TauBounds<T>> {
    check_joint_len(split, eigenvalues)?;
    assemble_bounds(
        BoundInputs {
            d_set: &split.d_set,
            cosines: angle_cosines(split),
            noise_row_norms: PerturbationSplit::row_norms(&split.h_star),
            perturbed_frobenius: split.e.add(&split.e_tilde)?.joint_frobenius(),
            loose_frobenius: split.h.joint_frobenius(),
        },
        eigenvalues,
        delta_set,
        constant,
    )
}

/// τ-bounds on the correlation scale, with `eigenvalues` those of the joint
/// population correlation matrix.
///
/// The literal operands use the covariance angle and `‖H_Y‖_F` for the loose
/// bound; the proof-consistent operands use their correlation counterparts.
pub fn tau_bounds_corr<T: Scalar>(
    split: &CorrelationSplit<T>,
    eigenvalues: &[T],
    delta_set: &[usize],
    constant: BoundConstant,
    operands: CorrelationOperands,
) -> Result<TauBounds<T>> {
    let s = &split.scaled;
    check_joint_len(s, eigenvalues)?;
    let (cosines, loose_frobenius) = match operands {
        CorrelationOperands::ProofConsistent => {
            (correlation_cosines(split, operands), s.h.joint_frobenius())
        }
        CorrelationOperands::Literal => (
            angle_cosines(&split.covariance),
            split.covariance.h.joint_frobenius(),
        ),
    };
    assemble_bounds(
        BoundInputs {
            d_set: &s.d_set,
            cosines,
            noise_row_norms: PerturbationSplit::row_norms(&s.h_star),
            perturbed_frobenius: s.e.add(&s.e_tilde)?.joint_frobenius(),
            loose_frobenius,
        },
        eigenvalues,
        delta_set,
        constant,
    )
}

fn check_joint_len<T: Scalar>(split: &PerturbationSplit<T>, eigenvalues: &[T]) -> Result<()> {
    let expected = split.population.dim() + 1;
    if eigenvalues.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "expected {expected} joint eigenvalues, got {}",
            eigenvalues.len()
        )));
    }
    Ok(())
}

/// Least-squares slope of `ln(mean norm)` against `ln N`.
///
/// Norms sharing a sample size are averaged first; at least three distinct
/// sizes with positive finite means are required.
pub fn convergence_rate_estimate<T: Scalar>(samples: &[(usize, T)]) -> Result<T> {
    let mut groups: BTreeMap<usize, (T, usize)> = BTreeMap::new();
    for &(n, norm) in samples {
        if n == 0 || !norm.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sample size {n} with norm {norm}"
            )));
        }
        let g = groups.entry(n).or_insert((T::zero(), 0));
        g.0 += norm;
        g.1 += 1;
    }
    if groups.len() < 3 {
        return Err(Error::DegenerateInput(format!(
            "{} distinct sample sizes; at least 3 needed",
            groups.len()
        )));
    }
    let mut points = Vec::with_capacity(groups.len());
    for (n, (sum, count)) in groups {
        let mean = sum / T::of(count as f64);
        if mean <= T::zero() {
            return Err(Error::DegenerateInput(format!(
                "mean norm at N = {n} is not positive"
            )));
        }
        points.push((T::of(n as f64).ln(), mean.ln()));
    }
    let k = T::of(points.len() as f64);
    let mx = points.iter().map(|p| p.0).sum::<T>() / k;
    let my = points.iter().map(|p| p.1).sum::<T>() / k;
    let sxy: T = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: T = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}
