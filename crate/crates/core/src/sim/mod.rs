//! Monte Carlo estimates of bootstrap rejection probabilities.
//!
//! Data follow a Gaussian copula: `X_ij = F^{-1}(Phi(Y_ij))` with AR(1)
//! Gaussian rows `Y_i` (asymmetric design), or the difference of two
//! independent such draws (symmetric design). Each replication computes
//! `T_n = max_statistic(X, mu, 0)` with the analytic mean `mu` and records
//! whether it exceeds the bootstrap critical value.
//!
//! Replication `r` reads data from stream `(base_seed, r)` and bootstrap
//! draws from stream `(base_seed, r ^ 2^32)`. Designs that differ only in
//! scheme or level therefore see identical datasets, and results do not
//! depend on grouping or thread scheduling.

mod table;

use std::time::Instant;

use rayon::prelude::*;

use crate::bootstrap::{BootstrapKind, BootstrapScheme, Bootstrapper};
use crate::distributions::{
    fill_ar1_row, gamma_mean, gamma_quantile_tails, std_normal_cdf, weibull_mean, weibull_quantile_tails,
    RngStream, WeightFamily,
};
use crate::stats::{check_level, max_abs_statistic, max_statistic, MeanVector, SampleMatrix, ShiftVector};
use crate::{Error, Result};

pub use table::{
    read_results, record_fields, reference_grid, reference_grid_with, reference_rate, reference_schemes, run_table, write_results,
    GridScale, GridSettings, ReferenceTable, ResultRow, CSV_HEADER, DESK_DIMS, DESK_NUM_BOOT, DESK_NUM_REPS,
};

/// Stream-id offset separating bootstrap draws from data generation.
pub const BOOTSTRAP_STREAM_BIT: u64 = 1 << 32;

pub const REF_ALPHA: f64 = 0.1;
pub const REF_NUM_BOOT: usize = 500;
pub const REF_NUM_REPS: usize = 20_000;
pub const REF_DIMS: [usize; 2] = [400, 800];
pub const REF_RHOS: [f64; 4] = [0.0, 0.25, 0.5, 0.75];
pub const REF_N_ASYMMETRIC: usize = 400;
pub const REF_N_SYMMETRIC: usize = 100;
pub const REF_WEIBULL_SHAPES: [f64; 3] = [2.0, 3.0, 4.0];
pub const REF_GAMMA_SHAPES: [f64; 3] = [1.0, 3.0, 5.0];
/// `gamma` of the third-order matching weights in the reference study.
pub const REF_THIRD_ORDER_GAMMA: f64 = 0.2;
pub const REF_WEIGHTS: [WeightFamily; 3] = [
    WeightFamily::Gaussian,
    WeightFamily::Rademacher,
    WeightFamily::ThirdOrder {
        gamma: REF_THIRD_ORDER_GAMMA,
    },
];

/// Marginal law `F` of the copula (scale fixed at 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Marginal {
    Weibull { k: f64 },
    Gamma { k: f64 },
    /// Every entry equals `value`; a degenerate design for sanity checks.
    #[doc(hidden)]
    PointMass { value: f64 },
}

impl Marginal {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Marginal::Weibull { k } | Marginal::Gamma { k } if !(k > 0.0 && k.is_finite()) => {
                Err(Error::invalid("marginal shape k", k, "must be positive"))
            }
            Marginal::PointMass { value } if !value.is_finite() => {
                Err(Error::invalid("point mass", value, "must be finite"))
            }
            _ => Ok(()),
        }
    }

    /// Analytic mean: `Gamma(1 + 1/k)` (Weibull) or `k` (Gamma).
    pub fn mean(&self) -> f64 {
        match *self {
            Marginal::Weibull { k } => weibull_mean(k),
            Marginal::Gamma { k } => gamma_mean(k),
            Marginal::PointMass { value } => value,
        }
    }

    /// `F^{-1}(Phi(y))`, evaluated from whichever normal tail is smaller.
    pub fn from_normal(&self, y: f64) -> Result<f64> {
        let (lower, upper) = (std_normal_cdf(y), std_normal_cdf(-y));
        match *self {
            Marginal::Weibull { k } => weibull_quantile_tails(lower, upper, k),
            Marginal::Gamma { k } => gamma_quantile_tails(lower, upper, k),
            Marginal::PointMass { value } => Ok(value),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Marginal::Weibull { .. } => "weibull",
            Marginal::Gamma { .. } => "gamma",
            Marginal::PointMass { .. } => "point_mass",
        }
    }

    /// Shape `k` (the location for the point mass).
    pub fn shape(&self) -> f64 {
        match *self {
            Marginal::Weibull { k } | Marginal::Gamma { k } => k,
            Marginal::PointMass { value } => value,
        }
    }

    /// Whether `k` is one of the shapes of the reference grid.
    pub fn on_reference_grid(&self) -> bool {
        match *self {
            Marginal::Weibull { k } => REF_WEIBULL_SHAPES.contains(&k),
            Marginal::Gamma { k } => REF_GAMMA_SHAPES.contains(&k),
            Marginal::PointMass { .. } => false,
        }
    }
}

/// One cell of a rejection-probability study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignSpec {
    pub symmetric: bool,
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub marginal: Marginal,
    pub alpha: f64,
    pub scheme: BootstrapScheme,
    pub num_reps: usize,
    pub base_seed: u64,
}

impl DesignSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::invalid("n x p", (self.n * self.p) as f64, "n and p must be positive"));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::invalid("rho", self.rho, "must lie in [0, 1)"));
        }
        if self.num_reps == 0 {
            return Err(Error::invalid("num_reps", 0.0, "need at least one replication"));
        }
        check_level("alpha", self.alpha)?;
        self.marginal.validate()?;
        self.scheme.validate()
    }

    fn same_data(&self, other: &DesignSpec) -> bool {
        self.symmetric == other.symmetric
            && self.n == other.n
            && self.p == other.p
            && self.rho == other.rho
            && self.marginal == other.marginal
            && self.num_reps == other.num_reps
            && self.base_seed == other.base_seed
    }

    pub fn data_stream(&self, replication: usize) -> RngStream {
        RngStream::new(self.base_seed, replication as u64)
    }

    pub fn bootstrap_stream(&self, replication: usize) -> RngStream {
        RngStream::new(self.base_seed, replication as u64 ^ BOOTSTRAP_STREAM_BIT)
    }

    /// Departures from the reference study settings, e.g. `num_reps=2000(ref 20000)`.
    pub fn deviations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let ref_n = if self.symmetric {
            REF_N_SYMMETRIC
        } else {
            REF_N_ASYMMETRIC
        };
        if self.n != ref_n {
            out.push(format!("n={}(ref {ref_n})", self.n));
        }
        if !REF_DIMS.contains(&self.p) {
            out.push(format!("p={}(ref 400|800)", self.p));
        }
        if !REF_RHOS.contains(&self.rho) {
            out.push(format!("rho={}(ref 0|0.25|0.5|0.75)", self.rho));
        }
        if !self.marginal.on_reference_grid() {
            out.push(format!("k={}(off-grid)", self.marginal.shape()));
        }
        if self.alpha != REF_ALPHA {
            out.push(format!("alpha={}(ref 0.1)", self.alpha));
        }
        if self.scheme.num_boot != REF_NUM_BOOT {
            out.push(format!("num_boot={}(ref {REF_NUM_BOOT})", self.scheme.num_boot));
        }
        if self.num_reps != REF_NUM_REPS {
            out.push(format!("num_reps={}(ref {REF_NUM_REPS})", self.num_reps));
        }
        let ref_scheme = !self.scheme.abs_variant
            && match self.scheme.kind {
                BootstrapKind::Empirical => true,
                BootstrapKind::Multiplier { weights, centered } => {
                    centered && REF_WEIGHTS.contains(&weights)
                }
            };
        if !ref_scheme {
            out.push(format!("scheme={}(off-grid)", self.scheme.label()));
        }
        out
    }

    /// `"full"` when every setting matches the reference study, else `"desk"`.
    pub fn scale_label(&self) -> &'static str {
        if self.deviations().is_empty() {
            "full"
        } else {
            "desk"
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectionEstimate {
    pub design: DesignSpec,
    pub rejections: u64,
    pub rejection_rate: f64,
    /// `sqrt(r (1 - r) / R)`
    pub mc_std_error: f64,
    /// Seconds; zero for estimates read back from a results file.
    pub wall_time: f64,
}

impl RejectionEstimate {
    pub fn from_count(design: DesignSpec, rejections: u64, wall_time: f64) -> Self {
        let reps = design.num_reps as f64;
        let rate = rejections as f64 / reps;
        Self {
            design,
            rejections,
            rejection_rate: rate,
            mc_std_error: (rate * (1.0 - rate) / reps).sqrt(),
            wall_time,
        }
    }
}

fn copula_matrix(n: usize, p: usize, rho: f64, marginal: &Marginal, stream: RngStream) -> Result<Vec<f64>> {
    let mut rng = stream.rng();
    let mut values = vec![0.0; n * p];
    for row in values.chunks_exact_mut(p) {
        fill_ar1_row(rho, &mut rng, row);
        for v in row.iter_mut() {
            *v = marginal.from_normal(*v)?;
        }
    }
    Ok(values)
}

fn check_design_fields(n: usize, p: usize, rho: f64, marginal: &Marginal) -> Result<()> {
    if n == 0 || p == 0 {
        return Err(Error::invalid("n x p", (n * p) as f64, "n and p must be positive"));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::invalid("rho", rho, "must lie in [0, 1)"));
    }
    marginal.validate()
}

/// `X_ij = F^{-1}(Phi(Y_ij))` and the analytic mean vector.
pub fn gen_asymmetric(
    n: usize,
    p: usize,
    rho: f64,
    marginal: &Marginal,
    stream: RngStream,
) -> Result<(SampleMatrix, MeanVector)> {
    check_design_fields(n, p, rho, marginal)?;
    let x = SampleMatrix::new(n, p, copula_matrix(n, p, rho, marginal, stream)?)?;
    Ok((x, MeanVector::constant(p, marginal.mean())))
}

/// `X_ij = F^{-1}(Phi(Y1_ij)) - F^{-1}(Phi(Y2_ij))` for independent copies
/// `Y1` (from `stream`) and `Y2` (from `stream.child(1)`); the mean is 0.
pub fn gen_symmetric(
    n: usize,
    p: usize,
    rho: f64,
    marginal: &Marginal,
    stream: RngStream,
) -> Result<(SampleMatrix, MeanVector)> {
    check_design_fields(n, p, rho, marginal)?;
    let mut first = copula_matrix(n, p, rho, marginal, stream)?;
    let second = copula_matrix(n, p, rho, marginal, stream.child(1))?;
    first.iter_mut().zip(&second).for_each(|(a, b)| *a -= b);
    Ok((SampleMatrix::new(n, p, first)?, MeanVector::zeros(p)))
}

/// Data of replication `r` of `design`.
pub fn generate(design: &DesignSpec, replication: usize) -> Result<(SampleMatrix, MeanVector)> {
    let stream = design.data_stream(replication);
    let DesignSpec { n, p, rho, marginal, .. } = *design;
    if design.symmetric {
        gen_symmetric(n, p, rho, &marginal, stream)
    } else {
        gen_asymmetric(n, p, rho, &marginal, stream)
    }
}

/// Rejection probability `P(T_n > c_{1-alpha})` estimated over `num_reps` replications.
pub fn estimate_rejection(design: &DesignSpec) -> Result<RejectionEstimate> {
    let mut out = estimate_rejection_batch(std::slice::from_ref(design))?;
    Ok(out.remove(0))
}

/// Estimates for designs sharing their data settings (they may differ in
/// scheme and `alpha`); each replication's dataset is generated once.
pub fn estimate_rejection_batch(designs: &[DesignSpec]) -> Result<Vec<RejectionEstimate>> {
    let Some(first) = designs.first() else {
        return Ok(Vec::new());
    };
    for design in designs {
        design.validate()?;
        if !first.same_data(design) {
            return Err(Error::invalid(
                "batch",
                designs.len() as f64,
                "designs in a batch must share n, p, rho, marginal, symmetry, num_reps and base_seed",
            ));
        }
    }
    let started = Instant::now();
    let zero_shift = ShiftVector::zeros(first.p);
    let outcomes: Vec<Result<Vec<bool>>> = (0..first.num_reps)
        .into_par_iter()
        .map(|r| {
            replicate(first, designs, r, &zero_shift).map_err(|e| Error::Replication {
                index: r,
                source: Box::new(e),
            })
        })
        .collect();
    let mut counts = vec![0u64; designs.len()];
    for outcome in outcomes {
        for (count, rejected) in counts.iter_mut().zip(outcome?) {
            *count += u64::from(rejected);
        }
    }
    let wall = started.elapsed().as_secs_f64() / designs.len() as f64;
    Ok(designs
        .iter()
        .zip(counts)
        .map(|(d, c)| RejectionEstimate::from_count(*d, c, wall))
        .collect())
}

fn replicate(data_design: &DesignSpec, designs: &[DesignSpec], r: usize, t: &ShiftVector) -> Result<Vec<bool>> {
    let (x, mu) = generate(data_design, r)?;
    let mut plain = None;
    let mut abs = None;
    let boot_stream = data_design.bootstrap_stream(r);
    designs
        .iter()
        .map(|design| {
            let stat = if design.scheme.abs_variant {
                *abs.get_or_insert(max_abs_statistic(&x, &mu, t)?)
            } else {
                *plain.get_or_insert(max_statistic(&x, &mu, t)?)
            };
            let cv = Bootstrapper::new(&x, t, &design.scheme)?.critical_value(design.alpha, boot_stream, 0)?;
            Ok(stat > cv.critical_value)
        })
        .collect()
}
