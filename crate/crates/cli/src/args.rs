use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use hdboot::bootstrap::BootstrapScheme;
use hdboot::distributions::WeightFamily;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "hdboot", version, about = "Bootstrap critical values for max statistics of high-dimensional means")]
pub struct Cli {
    /// Worker threads (default: all logical cores; THREADS overrides)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test H0: mu_j <= -t_j for all j on a data file
    Test(TestArgs),
    /// Estimate rejection probabilities for a JSON design config
    Simulate(SimulateArgs),
    /// Run the distribution and interpolation invariant suites
    Validate(ValidateArgs),
    /// Draw multiplier weights and summarize their moments
    Weights(WeightsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Empirical,
    Gaussian,
    Rademacher,
    /// Third-order matching weights
    #[value(alias = "third_order")]
    #[serde(alias = "third_order")]
    Mammen3,
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyName {
    Gaussian,
    Rademacher,
    #[value(alias = "third_order")]
    Mammen3,
    Beta,
}

impl From<FamilyName> for SchemeName {
    fn from(f: FamilyName) -> Self {
        match f {
            FamilyName::Gaussian => SchemeName::Gaussian,
            FamilyName::Rademacher => SchemeName::Rademacher,
            FamilyName::Mammen3 => SchemeName::Mammen3,
            FamilyName::Beta => SchemeName::Beta,
        }
    }
}

#[derive(Debug, Clone, Copy, Args)]
pub struct WeightParams {
    /// Third-order weight parameter, 0 < gamma < 0.2764
    #[arg(long, default_value_t = 0.2)]
    pub gamma: f64,
    /// Beta-family alpha > 0
    #[arg(long, default_value_t = 0.5)]
    pub beta_alpha: f64,
    /// Beta-family beta > 0
    #[arg(long, default_value_t = 1.5)]
    pub beta_beta: f64,
    /// Beta-family Gaussian share v in [0, 1]
    #[arg(long, default_value_t = 0.0)]
    pub beta_v: f64,
}

impl Default for WeightParams {
    fn default() -> Self {
        Self {
            gamma: 0.2,
            beta_alpha: 0.5,
            beta_beta: 1.5,
            beta_v: 0.0,
        }
    }
}

/// Weight family for a multiplier scheme; `None` for the empirical bootstrap.
pub fn weight_family(name: SchemeName, params: &WeightParams) -> Result<Option<WeightFamily>, CliError> {
    let family = match name {
        SchemeName::Empirical => return Ok(None),
        SchemeName::Gaussian => WeightFamily::Gaussian,
        SchemeName::Rademacher => WeightFamily::Rademacher,
        SchemeName::Mammen3 => WeightFamily::ThirdOrder { gamma: params.gamma },
        SchemeName::Beta => WeightFamily::Beta {
            alpha: params.beta_alpha,
            beta: params.beta_beta,
            v: params.beta_v,
        },
    };
    family.validate()?;
    Ok(Some(family))
}

pub fn build_scheme(
    name: SchemeName,
    params: &WeightParams,
    num_boot: usize,
    abs: bool,
    uncentered: bool,
) -> Result<BootstrapScheme, CliError> {
    let scheme = match weight_family(name, params)? {
        None if uncentered => {
            return Err(CliError::Usage(
                "--uncentered applies to multiplier schemes only".into(),
            ))
        }
        None => BootstrapScheme::empirical(num_boot),
        Some(family) => {
            let s = BootstrapScheme::multiplier(family, num_boot);
            if uncentered {
                s.uncentered()
            } else {
                s
            }
        }
    }
    .with_abs(abs);
    scheme.validate()?;
    Ok(scheme)
}

/// `--B`: a draw count or `exact`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BootCount {
    Draws(usize),
    Exact,
}

impl FromStr for BootCount {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("exact") {
            return Ok(BootCount::Exact);
        }
        match s.parse::<usize>() {
            Ok(b) if b > 0 => Ok(BootCount::Draws(b)),
            _ => Err(format!("expected a positive integer or `exact`, got {s:?}")),
        }
    }
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Data CSV: rows are observations (headerless or one header row)
    pub data: PathBuf,
    /// Known mean: one value (broadcast) or a comma-separated p-vector
    #[arg(long, conflicts_with = "mu_file", allow_hyphen_values = true)]
    pub mu: Option<String>,
    /// Known mean as a CSV file of p values
    #[arg(long)]
    pub mu_file: Option<PathBuf>,
    /// Shift vector: one value (broadcast) or a comma-separated p-vector
    #[arg(long, conflicts_with = "t_file", allow_hyphen_values = true)]
    pub t: Option<String>,
    /// Shift vector as a CSV file of p values
    #[arg(long)]
    pub t_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = SchemeName::Gaussian)]
    pub bootstrap: SchemeName,
    #[command(flatten)]
    pub weights: WeightParams,
    /// Bootstrap draws, or `exact` for full enumeration (small n only)
    #[arg(short = 'B', long = "B", default_value = "500")]
    pub num_boot: BootCount,
    /// Added to the critical value before comparing
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
    /// Use max_j |.| instead of max_j
    #[arg(long)]
    pub abs: bool,
    /// Multiply raw rows instead of centered rows
    #[arg(long)]
    pub uncentered: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the JSON result here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON config (see configs/schema.json)
    pub config: PathBuf,
    /// Results CSV; existing records are kept and skipped on rerun
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Base seed, overriding the top-level `base_seed` of the config
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum CheckName {
    EpsilonLaw,
    EpsilonExact,
    WInvariance,
    TailBound,
    ThirdOrderIdentities,
    WeightMoments,
    GammaRoundtrip,
    NormalCdf,
    Ar1,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Checks to run (comma-separated); default all
    #[arg(long, value_enum, value_delimiter = ',')]
    pub only: Vec<CheckName>,
    /// n for the Monte Carlo epsilon law
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Monte Carlo repetitions for epsilon-law and tail-bound
    #[arg(long, default_value_t = 100_000)]
    pub reps: u64,
    /// Restrict weight-moments to one family (default: all four)
    #[arg(long, value_enum)]
    pub family: Option<FamilyName>,
    #[command(flatten)]
    pub weights: WeightParams,
    /// Draws per family for weight-moments
    #[arg(long, default_value_t = 1_000_000)]
    pub count: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    #[arg(long, value_enum)]
    pub family: FamilyName,
    #[command(flatten)]
    pub weights: WeightParams,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Draws CSV (default stdout)
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Moment summary JSON (default stderr)
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

/// Uses `seed` or draws one from the OS and reports it on stderr.
pub fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s}");
        s
    })
}
