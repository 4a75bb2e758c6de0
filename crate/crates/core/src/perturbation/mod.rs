//! Decomposition of sample moments into population, sparse perturbation and
//! sampling noise, and the conditions under which OLS and PLA discard the
//! same block.

mod conditions;
mod split;

pub use conditions::{
    angle_cosines, check_angle_condition, check_corr_angle_condition, check_corr_norm_condition,
    check_norm_condition, check_ratio_condition, convergence_rate_estimate, correlation_cosines,
    eigengap, evaluate_conditions, tau_bounds, tau_bounds_corr, AngleCheck, BoundConstant,
    BoundTuple, ConditionReport, CorrelationOperands, NormCheck, RatioCheck, TauBounds, GAP_TIE,
    RATIO_ZERO,
};
pub use split::{
    split_correlation, split_known_population, CorrelationSplit, JointMoments, PerturbationSplit,
};
