//! Seeded Monte Carlo studies over block-structured Gaussian populations.
//!
//! Everything here is `f64`.

mod population;
mod rng;
mod study;

pub use population::{
    make_population, sample_gaussian, PopulationParams, PopulationSpec, Structure,
    MAX_POPULATION_ATTEMPTS,
};
pub use rng::{mix64, SeededRng, TrialRng};
pub use study::{
    auto_tau, covariate_discards, run_study, run_trial, sample_moments, spec_bounds, summarize,
    ImplicationViolations, SampleSizeSummary, SpecBounds, Study, StudySummary, TauChoice,
    TrialConfig, TrialOutcome, ViolationCounts, AUTO_TAU_MAX,
};
