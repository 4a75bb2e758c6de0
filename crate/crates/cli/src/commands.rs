//! Subcommand implementations. Each returns the bytes to emit.

use std::path::PathBuf;

use pla_core::linalg::mean_center;
use pla_core::ols::{discard_by_ols, ols_fit};
use pla_core::perturbation::{BoundConstant, CorrelationOperands};
use pla_core::pla::{run_pla, Basis, DiscardCandidate, PlaReport};
use pla_core::simulation::{
    covariate_discards, make_population, run_study, sample_gaussian, sample_moments, spec_bounds,
    PopulationParams, PopulationSpec, SeededRng, SpecBounds, StudySummary, TauChoice, TrialConfig,
    TrialOutcome,
};
use pla_core::Matrix64;
use serde::Serialize;

use crate::args::{BoundsArgs, CompareArgs, Format, PlaArgs, SampleArgs, SimulateArgs};
use crate::error::{CliError, CliResult};
use crate::io::{fmt_float, output_error, read_csv, write_csv, Dataset};

pub const SCHEMA_VERSION: &str = "1";

pub const GAP_CONVENTION: &str = "eigenvalues sorted descending, 0-based; \
gap(delta) = min(lambda[delta-1] - lambda[delta], lambda[delta] - lambda[delta+1]) \
with lambda[-1] = +inf and lambda[M+1] = -inf; a zero gap makes the bounds infeasible";

/// Output of one subcommand: `(destination, bytes)` pairs, `None` meaning
/// stdout.
pub type Emission = Vec<(Option<PathBuf>, Vec<u8>)>;

fn json_bytes<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(output_error)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn fixed_tau(tau: TauChoice, command: &str) -> CliResult<f64> {
    match tau {
        TauChoice::Fixed(t) => Ok(t),
        TauChoice::Auto => Err(CliError::Usage(format!(
            "--tau auto needs a known population; give a number for `{command}`"
        ))),
    }
}

fn names_of(idx: &[usize], names: &[String]) -> Vec<String> {
    idx.iter().map(|&i| names[i].clone()).collect()
}

/// Covariate names of a simulated population, then the response.
pub fn population_names(m: usize) -> Vec<String> {
    (1..=m)
        .map(|i| format!("x{i}"))
        .chain(["y".to_string()])
        .collect()
}

#[derive(Debug, Serialize)]
struct CandidateOut {
    discard_set: Vec<String>,
    discard_indices: Vec<usize>,
    eigen_set: Vec<usize>,
    max_offblock_loading: f64,
    explained_variance_exact: f64,
    explained_variance_approx: f64,
}

fn candidate_out(c: &DiscardCandidate<f64>, names: &[String]) -> CandidateOut {
    CandidateOut {
        discard_set: names_of(&c.discard_set, names),
        discard_indices: c.discard_set.clone(),
        eigen_set: c.eigen_set.clone(),
        max_offblock_loading: c.max_offblock_loading,
        explained_variance_exact: c.explained_variance_exact,
        explained_variance_approx: c.explained_variance_approx,
    }
}

#[derive(Debug, Serialize)]
struct PlaOut {
    schema_version: &'static str,
    command: &'static str,
    basis: Basis,
    tau: f64,
    rows: usize,
    columns: Vec<String>,
    eigenvalues: Vec<f64>,
    candidates: Vec<CandidateOut>,
    zero_variance_columns: Vec<String>,
}

fn pla_out(report: &PlaReport<f64>, names: &[String], rows: usize) -> PlaOut {
    PlaOut {
        schema_version: SCHEMA_VERSION,
        command: "pla",
        basis: report.basis,
        tau: report.tau,
        rows,
        columns: names.to_vec(),
        eigenvalues: report.eigensystem.eigenvalues().to_vec(),
        candidates: report
            .candidates
            .iter()
            .map(|c| candidate_out(c, names))
            .collect(),
        zero_variance_columns: names_of(&report.zero_variance_columns, names),
    }
}

fn candidates_csv(report: &PlaReport<f64>, names: &[String]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "discard_set",
        "eigen_set",
        "max_offblock_loading",
        "explained_variance_exact",
        "explained_variance_approx",
    ])
    .map_err(output_error)?;
    for c in &report.candidates {
        w.write_record([
            names_of(&c.discard_set, names).join(";"),
            join(&c.eigen_set),
            fmt_float(c.max_offblock_loading),
            fmt_float(c.explained_variance_exact),
            fmt_float(c.explained_variance_approx),
        ])
        .map_err(output_error)?;
    }
    w.into_inner().map_err(output_error)
}

fn join<T: ToString>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

fn join_floats(items: &[f64]) -> String {
    items
        .iter()
        .map(|&v| fmt_float(v))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn cmd_pla(args: &PlaArgs) -> CliResult<Emission> {
    let tau = fixed_tau(args.tau, "pla")?;
    let data = read_csv(&args.input)?;
    let report = run_pla(&data.data, args.basis.into(), tau).map_err(|e| named(e, &data.names))?;
    let bytes = match args.output.format {
        Format::Json => json_bytes(&pla_out(&report, &data.names, data.data.rows()))?,
        Format::Csv => candidates_csv(&report, &data.names)?,
    };
    Ok(vec![(args.output.out.clone(), bytes)])
}

/// Replaces column indices in variance errors by column names.
fn named(e: pla_core::Error, names: &[String]) -> CliError {
    match e {
        pla_core::Error::DegenerateVariance { index, variance } if index < names.len() => {
            CliError::Degenerate(format!(
                "column '{}' has non-positive variance {variance:e}",
                names[index]
            ))
        }
        other => other.into(),
    }
}

#[derive(Debug, Serialize)]
struct CoefficientOut {
    name: String,
    coefficient: f64,
    standard_error: f64,
    t_stat: f64,
    p_value: f64,
    ols_discard: bool,
    pla_discard: bool,
}

#[derive(Debug, Serialize)]
struct OlsOut {
    df: usize,
    residual_variance: f64,
    coefficients: Vec<CoefficientOut>,
}

#[derive(Debug, Serialize)]
struct PlaCompareOut {
    columns: Vec<String>,
    eigenvalues: Vec<f64>,
    candidates: Vec<CandidateOut>,
    discarded: Vec<String>,
}

#[derive(Debug, Default, Serialize)]
struct Agreement {
    both: Vec<String>,
    pla_only: Vec<String>,
    ols_only: Vec<String>,
    neither: Vec<String>,
}

#[derive(Debug, Serialize)]
struct CompareOut {
    schema_version: &'static str,
    command: &'static str,
    basis: Basis,
    tau: f64,
    alpha: f64,
    rows: usize,
    response: String,
    covariates: Vec<String>,
    pla: PlaCompareOut,
    ols: OlsOut,
    agreement: Agreement,
}

pub fn cmd_compare(args: &CompareArgs) -> CliResult<Emission> {
    let tau = fixed_tau(args.tau, "compare")?;
    let data = read_csv(&args.input)?;
    let bytes = compare_dataset(&data, args, tau)?;
    Ok(vec![(args.output.out.clone(), bytes)])
}

fn compare_dataset(data: &Dataset, args: &CompareArgs, tau: f64) -> CliResult<Vec<u8>> {
    let response = data.column_index(&args.response).ok_or_else(|| {
        CliError::Input(format!(
            "response column '{}' not found; columns are {:?}",
            args.response, data.names
        ))
    })?;
    if data.names.len() < 2 {
        return Err(CliError::Degenerate("no covariate columns".into()));
    }
    let rows: Vec<usize> = (0..data.data.rows()).collect();
    let mut order: Vec<usize> = (0..data.names.len()).filter(|&j| j != response).collect();
    order.push(response);
    let joint = data.data.select(&rows, &order);
    let names = names_of(&order, &data.names);
    let m = order.len() - 1;

    let y_col = joint.column(m);
    if y_col.iter().all(|&v| v == y_col[0]) {
        return Err(CliError::Degenerate(format!(
            "response column '{}' is constant",
            args.response
        )));
    }

    let basis: Basis = args.basis.into();
    let report = run_pla(&joint, basis, tau).map_err(|e| named(e, &names))?;
    let pla_discards = covariate_discards(&report, m);

    let centred = mean_center(&joint)?;
    let x = centred.select(&rows, &(0..m).collect::<Vec<_>>());
    let fit = ols_fit(&x, &centred.column(m)).map_err(|e| named(e, &names))?;
    let all: Vec<usize> = (0..m).collect();
    let ols_flags = discard_by_ols(&fit, &all, args.alpha)?;

    let mut agreement = Agreement::default();
    let mut coefficients = Vec::with_capacity(m);
    for j in 0..m {
        let (p, o) = (pla_discards.contains(&j), ols_flags[j]);
        let bucket = match (p, o) {
            (true, true) => &mut agreement.both,
            (true, false) => &mut agreement.pla_only,
            (false, true) => &mut agreement.ols_only,
            (false, false) => &mut agreement.neither,
        };
        bucket.push(names[j].clone());
        coefficients.push(CoefficientOut {
            name: names[j].clone(),
            coefficient: fit.coefficients[j],
            standard_error: fit.standard_errors[j],
            t_stat: fit.t_stats[j],
            p_value: fit.p_values[j],
            ols_discard: o,
            pla_discard: p,
        });
    }

    if args.output.format == Format::Csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "name",
            "coefficient",
            "standard_error",
            "t_stat",
            "p_value",
            "ols_discard",
            "pla_discard",
        ])
        .map_err(output_error)?;
        for c in &coefficients {
            w.write_record([
                c.name.clone(),
                fmt_float(c.coefficient),
                fmt_float(c.standard_error),
                fmt_float(c.t_stat),
                fmt_float(c.p_value),
                c.ols_discard.to_string(),
                c.pla_discard.to_string(),
            ])
            .map_err(output_error)?;
        }
        return w.into_inner().map_err(output_error);
    }

    json_bytes(&CompareOut {
        schema_version: SCHEMA_VERSION,
        command: "compare",
        basis,
        tau,
        alpha: args.alpha,
        rows: data.data.rows(),
        response: args.response.clone(),
        covariates: names[..m].to_vec(),
        pla: PlaCompareOut {
            eigenvalues: report.eigensystem.eigenvalues().to_vec(),
            candidates: report
                .candidates
                .iter()
                .map(|c| candidate_out(c, &names))
                .collect(),
            discarded: names_of(&pla_discards, &names),
            columns: names.clone(),
        },
        ols: OlsOut {
            df: fit.df,
            residual_variance: fit.residual_variance,
            coefficients,
        },
        agreement,
    })
}

#[derive(Debug, Serialize)]
struct PopulationOut {
    params: PopulationParams,
    seed: u64,
    columns: Vec<String>,
    d_set: Vec<usize>,
    dc_set: Vec<usize>,
    sigma: Vec<Vec<f64>>,
    cov: Vec<f64>,
    var_y: f64,
    beta_true: Vec<f64>,
    perturbation: Vec<Vec<f64>>,
    perturbation_cov: Vec<f64>,
}

fn population_out(spec: &PopulationSpec, seed: u64) -> PopulationOut {
    PopulationOut {
        params: spec.params.clone(),
        seed,
        columns: population_names(spec.m()),
        d_set: spec.d_set.clone(),
        dc_set: spec.dc_set.clone(),
        sigma: spec.sigma.matrix().to_f64_rows(),
        cov: spec.cov.as_slice().to_vec(),
        var_y: spec.var_y,
        beta_true: spec.beta_true.as_slice().to_vec(),
        perturbation: spec.e.matrix().to_f64_rows(),
        perturbation_cov: spec.e_cov.as_slice().to_vec(),
    }
}

#[derive(Debug, Serialize)]
struct ConstantOut {
    name: &'static str,
    value: f64,
}

fn constant_out(c: BoundConstant) -> ConstantOut {
    ConstantOut {
        name: match c {
            BoundConstant::TwoThirds => "paper",
            BoundConstant::DavisKahan => "dk",
            BoundConstant::Custom(_) => "custom",
        },
        value: c.value(),
    }
}

#[derive(Debug, Serialize)]
struct BoundsOut {
    schema_version: &'static str,
    command: &'static str,
    mode: &'static str,
    n: Option<usize>,
    population: PopulationOut,
    operands: CorrelationOperands,
    constant_used: ConstantOut,
    gap_convention: &'static str,
    #[serde(flatten)]
    result: SpecBounds,
}

/// Bounds for the population described by `args`, as the library computes
/// them.
pub fn bounds_for(args: &BoundsArgs) -> CliResult<(PopulationSpec, SpecBounds)> {
    let seed = args.population.seed;
    let spec = make_population(&args.population.params(), seed)?;
    let operands: CorrelationOperands = args.operands.into();
    let result = match args.n {
        None => spec_bounds(&spec, args.basis.into(), args.constant, operands, None)?,
        Some(n) => {
            let mut rng = SeededRng::new(seed).trial(0, 0);
            let base = sample_moments(&sample_gaussian(&spec, n, false, &mut rng.base)?)?;
            let perturbed = sample_moments(&sample_gaussian(&spec, n, true, &mut rng.perturbed)?)?;
            spec_bounds(
                &spec,
                args.basis.into(),
                args.constant,
                operands,
                Some((&base, &perturbed)),
            )?
        }
    };
    Ok((spec, result))
}

pub fn cmd_bounds(args: &BoundsArgs) -> CliResult<Emission> {
    if let Some(n) = args.n {
        check_sample_size(n, args.population.m)?;
    }
    let (spec, result) = bounds_for(args)?;
    let bytes = match args.output.format {
        Format::Json => json_bytes(&BoundsOut {
            schema_version: SCHEMA_VERSION,
            command: "bounds",
            mode: if args.n.is_some() {
                "sample"
            } else {
                "population"
            },
            n: args.n,
            population: population_out(&spec, args.population.seed),
            operands: args.operands.into(),
            constant_used: constant_out(args.constant),
            gap_convention: GAP_CONVENTION,
            result,
        })?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "d",
                "d_star",
                "delta",
                "gap",
                "lower",
                "upper_tight",
                "upper_necessary",
            ])
            .map_err(output_error)?;
            for t in &result.bounds.tuples {
                w.write_record([
                    t.d.to_string(),
                    t.d_star.to_string(),
                    t.delta.to_string(),
                    fmt_float(t.gap),
                    fmt_float(t.lower),
                    fmt_float(t.upper_tight),
                    fmt_float(t.upper_necessary),
                ])
                .map_err(output_error)?;
            }
            w.into_inner().map_err(output_error)?
        }
    };
    Ok(vec![(args.output.out.clone(), bytes)])
}

fn check_sample_size(n: usize, m: usize) -> CliResult<()> {
    if n <= m + 1 {
        Err(CliError::Usage(format!(
            "sample size {n} must exceed the number of joint variables {}",
            m + 1
        )))
    } else {
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct SimulateConfigOut {
    n_list: Vec<usize>,
    replications: usize,
    basis: Basis,
    tau: serde_json::Value,
    alpha: f64,
    constant: ConstantOut,
}

#[derive(Debug, Serialize)]
struct SimulateOut {
    schema_version: &'static str,
    command: &'static str,
    config: SimulateConfigOut,
    population: PopulationOut,
    summary: StudySummary,
}

const TRIAL_COLUMNS: [&str; 30] = [
    "n_index",
    "replication",
    "n",
    "tau",
    "pla_discards",
    "pla_recovers_d",
    "ols_discards",
    "ols_discards_d",
    "ols_coefficients",
    "ols_p_values",
    "ratio_holds",
    "angle_holds",
    "norm_holds",
    "corr_angle_holds",
    "corr_norm_holds",
    "approx_noise",
    "approx_perturbed",
    "approx_error",
    "bounds_feasible",
    "aggregate_lower",
    "aggregate_upper",
    "aggregate_upper_necessary",
    "loose_upper",
    "h_norm",
    "e_tilde_norm",
    "h_rho_norm",
    "max_sigma_deviation",
    "angle_without_ratio",
    "ratio_without_coefficient_order",
    "violations",
];

fn trials_csv(trials: &[TrialOutcome], names: &[String]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRIAL_COLUMNS).map_err(output_error)?;
    for t in trials {
        let v = &t.violations;
        let count = [
            v.angle_without_ratio,
            v.ratio_without_coefficient_order,
            v.angle_without_norm,
            v.corr_angle_without_corr_norm,
        ]
        .iter()
        .filter(|&&b| b)
        .count();
        w.write_record([
            t.n_index.to_string(),
            t.replication.to_string(),
            t.n.to_string(),
            fmt_float(t.tau),
            names_of(&t.pla_discards, names).join(";"),
            t.pla_recovers_d.to_string(),
            names_of(&t.ols_discards, names).join(";"),
            t.ols_discards_d.to_string(),
            join_floats(&t.ols_coefficients),
            join_floats(&t.ols_p_values),
            t.ratio_holds.to_string(),
            t.angle_holds.to_string(),
            t.norm_holds.to_string(),
            t.corr_angle_holds.to_string(),
            t.corr_norm_holds.to_string(),
            join_floats(&t.approx_noise),
            join_floats(&t.approx_perturbed),
            fmt_float(t.approx_error),
            t.bounds_feasible.to_string(),
            fmt_float(t.aggregate_lower),
            fmt_float(t.aggregate_upper),
            fmt_float(t.aggregate_upper_necessary),
            fmt_float(t.loose_upper),
            fmt_float(t.h_norm),
            fmt_float(t.e_tilde_norm),
            fmt_float(t.h_rho_norm),
            fmt_float(t.max_sigma_deviation),
            v.angle_without_ratio.to_string(),
            v.ratio_without_coefficient_order.to_string(),
            count.to_string(),
        ])
        .map_err(output_error)?;
    }
    w.into_inner().map_err(output_error)
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<Emission> {
    let m = args.population.m;
    for &n in &args.n_list {
        check_sample_size(n, m)?;
    }
    let seed = args.population.seed;
    let spec = make_population(&args.population.params(), seed)?;
    let config = TrialConfig {
        basis: args.basis.into(),
        tau: args.tau,
        alpha: args.alpha,
        constant: args.constant,
    };
    let study = run_study(
        &spec,
        &args.n_list,
        args.reps,
        &config,
        &SeededRng::new(seed),
        args.parallel,
    )?;
    let names = population_names(m);
    let trials = trials_csv(&study.trials, &names)?;

    let mut out = Vec::new();
    match args.output.format {
        Format::Csv => out.push((args.output.out.clone(), trials)),
        Format::Json => {
            let summary = json_bytes(&SimulateOut {
                schema_version: SCHEMA_VERSION,
                command: "simulate",
                config: SimulateConfigOut {
                    n_list: args.n_list.clone(),
                    replications: args.reps,
                    basis: config.basis,
                    tau: match args.tau {
                        TauChoice::Auto => serde_json::Value::from("auto"),
                        TauChoice::Fixed(t) => serde_json::Value::from(t),
                    },
                    alpha: args.alpha,
                    constant: constant_out(args.constant),
                },
                population: population_out(&spec, seed),
                summary: study.summary,
            })?;
            out.push((args.output.out.clone(), summary));
            if let Some(path) = &args.trials_out {
                out.push((Some(path.clone()), trials));
            }
        }
    }
    Ok(out)
}

pub fn cmd_sample(args: &SampleArgs) -> CliResult<Emission> {
    check_sample_size(args.n, args.population.m)?;
    let seed = args.population.seed;
    let spec = make_population(&args.population.params(), seed)?;
    let mut rng = SeededRng::new(seed).trial(0, 0);
    let data: Matrix64 = if args.perturbed {
        sample_gaussian(&spec, args.n, true, &mut rng.perturbed)?
    } else {
        sample_gaussian(&spec, args.n, false, &mut rng.base)?
    };
    let bytes = write_csv(&population_names(spec.m()), &data)?;
    Ok(vec![(args.out.clone(), bytes)])
}
