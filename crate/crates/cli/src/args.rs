use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pla_core::perturbation::{BoundConstant, CorrelationOperands};
use pla_core::pla::Basis;
use pla_core::simulation::{PopulationParams, Structure, TauChoice};

#[derive(Debug, Parser)]
#[command(
    name = "pla",
    version,
    about = "Principal loading analysis and OLS discarding"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run PLA on a CSV sample.
    Pla(PlaArgs),
    /// Compare PLA and OLS discarding on a CSV sample with a response column.
    Compare(CompareArgs),
    /// Cut-off bounds for a simulated population.
    Bounds(BoundsArgs),
    /// Monte Carlo study over sample sizes and replications.
    Simulate(SimulateArgs),
    /// Draw a sample from a simulated population as CSV.
    Sample(SampleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisArg {
    #[value(alias = "covariance")]
    Cov,
    #[value(alias = "correlation")]
    Corr,
}

impl From<BasisArg> for Basis {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::Cov => Basis::Covariance,
            BasisArg::Corr => Basis::Correlation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StructureArg {
    Random,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OperandsArg {
    Proof,
    Literal,
}

impl From<OperandsArg> for CorrelationOperands {
    fn from(o: OperandsArg) -> Self {
        match o {
            OperandsArg::Proof => CorrelationOperands::ProofConsistent,
            OperandsArg::Literal => CorrelationOperands::Literal,
        }
    }
}

fn parse_tau(s: &str) -> Result<TauChoice, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(TauChoice::Auto);
    }
    let t: f64 = s
        .parse()
        .map_err(|_| format!("expected a number or 'auto', got '{s}'"))?;
    if (0.0..1.0).contains(&t) {
        Ok(TauChoice::Fixed(t))
    } else {
        Err(format!("cut-off must lie in [0, 1), got {t}"))
    }
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s
        .parse()
        .map_err(|_| format!("expected a number, got '{s}'"))?;
    if a > 0.0 && a < 1.0 {
        Ok(a)
    } else {
        Err(format!("significance level must lie in (0, 1), got {a}"))
    }
}

fn parse_constant(s: &str) -> Result<BoundConstant, String> {
    match s.to_ascii_lowercase().as_str() {
        "paper" => Ok(BoundConstant::TwoThirds),
        "dk" | "davis-kahan" => Ok(BoundConstant::DavisKahan),
        _ => {
            let c: f64 = s
                .parse()
                .map_err(|_| format!("expected 'paper', 'dk' or a number, got '{s}'"))?;
            if c.is_finite() && c > 0.0 {
                Ok(BoundConstant::Custom(c))
            } else {
                Err(format!("constant must be positive and finite, got {c}"))
            }
        }
    }
}

fn parse_positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(_) => Err(format!("expected a positive integer, got '{s}'")),
    }
}

fn parse_finite(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number, got '{s}'")),
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file (written atomically); stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct PopulationArgs {
    /// Number of covariates.
    #[arg(long, default_value_t = 4, value_parser = parse_positive)]
    pub m: usize,
    /// Size of the discardable block.
    #[arg(long, default_value_t = 1, value_parser = parse_positive)]
    pub d_size: usize,
    /// Norm of the true coefficient vector (or explained variance share with
    /// --unit-variance).
    #[arg(long, default_value_t = 1.0, value_parser = parse_finite)]
    pub signal: f64,
    /// Size of the perturbation between the block and its complement.
    #[arg(long, default_value_t = 0.05, value_parser = parse_finite)]
    pub eps: f64,
    /// Also perturb the covariance of the block with the response.
    #[arg(long)]
    pub perturb_cov: bool,
    #[arg(long, value_enum, default_value = "random")]
    pub structure: StructureArg,
    /// Scale the population to unit variances.
    #[arg(long)]
    pub unit_variance: bool,
    #[arg(long, env = "PLA_SEED", default_value_t = 42)]
    pub seed: u64,
}

impl PopulationArgs {
    pub fn params(&self) -> PopulationParams {
        PopulationParams {
            m: self.m,
            d_size: self.d_size,
            signal: self.signal,
            perturb_eps: self.eps,
            perturb_cov: self.perturb_cov,
            structure: match self.structure {
                StructureArg::Random => Structure::Random,
                StructureArg::Identity => Structure::Identity,
            },
            unit_variance: self.unit_variance,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PlaArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "cov")]
    pub basis: BasisArg,
    #[arg(long, value_parser = parse_tau)]
    pub tau: TauChoice,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Name of the response column.
    #[arg(long)]
    pub response: String,
    #[arg(long, value_enum, default_value = "cov")]
    pub basis: BasisArg,
    #[arg(long, value_parser = parse_tau)]
    pub tau: TauChoice,
    #[arg(long, default_value = "0.05", value_parser = parse_alpha)]
    pub alpha: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub population: PopulationArgs,
    #[arg(long, value_enum, default_value = "cov")]
    pub basis: BasisArg,
    #[arg(long, default_value = "paper", value_parser = parse_constant)]
    pub constant: BoundConstant,
    /// Operands of the correlation-scale angle.
    #[arg(long, value_enum, default_value = "proof")]
    pub operands: OperandsArg,
    /// Sample size; without it the bounds use the population itself.
    #[arg(long, value_parser = parse_positive)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub population: PopulationArgs,
    #[arg(long, value_enum, default_value = "cov")]
    pub basis: BasisArg,
    #[arg(long, default_value = "auto", value_parser = parse_tau)]
    pub tau: TauChoice,
    #[arg(long, default_value = "0.05", value_parser = parse_alpha)]
    pub alpha: f64,
    #[arg(long, default_value = "paper", value_parser = parse_constant)]
    pub constant: BoundConstant,
    /// Sample size; repeat for several.
    #[arg(long = "n", value_parser = parse_positive, default_values_t = [100, 400, 1600])]
    pub n_list: Vec<usize>,
    #[arg(long, default_value_t = 100, value_parser = parse_positive)]
    pub reps: usize,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub parallel: usize,
    /// Per-trial CSV written next to the JSON summary.
    #[arg(long)]
    pub trials_out: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub population: PopulationArgs,
    #[arg(long, value_parser = parse_positive)]
    pub n: usize,
    /// Draw from the perturbed population.
    #[arg(long)]
    pub perturbed: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
