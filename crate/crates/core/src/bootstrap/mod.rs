//! Bootstrap draws of the max statistic, critical values and test decisions.
//!
//! A draw is `T* = max_j n^{-1/2} sum_i (X*_ij + t_j)` where the `X*_i` are
//! either resampled (with replacement) from the centered rows `X_i - X̄`
//! (empirical bootstrap) or equal to `e_i (X_i - X̄)` for i.i.d. multipliers
//! `e_i` (multiplier bootstrap). Replication `b` of a critical value always
//! reads its randomness from `stream.child(b)`, so the draw multiset does not
//! depend on how replications are scheduled across threads.

mod exact;

use rand::Rng;
use rayon::prelude::*;

use crate::distributions::{RngStream, WeightFamily, WeightSampler};
use crate::stats::{check_len, check_level, empirical_quantile_in_place, SampleMatrix, ShiftVector};
use crate::{Error, Result};

pub use exact::{
    exact_bootstrap_law, exact_critical_value, ExactCriticalValue, ExactLaw, MAX_EXACT_EMPIRICAL_N,
    MAX_EXACT_RADEMACHER_N,
};

/// Rows folded into a block sum before it is added to the running total.
const ACC_BLOCK: usize = 64;

/// Draws kept in [`CriticalValueResult::draws`] unless a budget is given.
pub const DEFAULT_RETAIN_LIMIT: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BootstrapKind {
    /// Rows drawn uniformly with replacement from the centered rows.
    Empirical,
    /// Centered rows (raw rows when `centered` is false) times i.i.d. weights.
    Multiplier { weights: WeightFamily, centered: bool },
}

/// Which bootstrap to run and how many replications `B` to draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapScheme {
    pub kind: BootstrapKind,
    pub num_boot: usize,
    /// Use `max_j |.|` (the stacked `2p`-coordinate statistic) instead of `max_j`.
    pub abs_variant: bool,
}

impl BootstrapScheme {
    pub fn empirical(num_boot: usize) -> Self {
        Self {
            kind: BootstrapKind::Empirical,
            num_boot,
            abs_variant: false,
        }
    }

    pub fn multiplier(weights: WeightFamily, num_boot: usize) -> Self {
        Self {
            kind: BootstrapKind::Multiplier {
                weights,
                centered: true,
            },
            num_boot,
            abs_variant: false,
        }
    }

    pub fn with_abs(mut self, abs_variant: bool) -> Self {
        self.abs_variant = abs_variant;
        self
    }

    /// Multiply the raw rows instead of the centered ones (no effect on the
    /// empirical bootstrap).
    pub fn uncentered(mut self) -> Self {
        if let BootstrapKind::Multiplier { centered, .. } = &mut self.kind {
            *centered = false;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_boot == 0 {
            return Err(Error::invalid("num_boot", 0.0, "need at least one replication"));
        }
        if let BootstrapKind::Multiplier { weights, .. } = &self.kind {
            weights.validate()?;
        }
        Ok(())
    }

    /// Stable text label, e.g. `empirical`, `rademacher+abs`, `third_order(0.2)`.
    pub fn label(&self) -> String {
        let mut label = match &self.kind {
            BootstrapKind::Empirical => "empirical".to_string(),
            BootstrapKind::Multiplier { weights, centered } => {
                let mut s = weights.label();
                if !centered {
                    s.push_str("+uncentered");
                }
                s
            }
        };
        if self.abs_variant {
            label.push_str("+abs");
        }
        label
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalValueResult {
    pub critical_value: f64,
    pub alpha: f64,
    pub scheme: BootstrapScheme,
    pub stream: RngStream,
    /// The full draw multiset when `B` fits the retention budget.
    pub draws: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestDecision {
    pub statistic: f64,
    pub critical_value: f64,
    pub eta: f64,
    pub reject: bool,
}

/// Per-thread buffers for one draw.
#[derive(Debug, Clone)]
pub struct DrawScratch {
    acc: Vec<f64>,
    block: Vec<f64>,
    weights: Vec<f64>,
}

impl DrawScratch {
    pub fn new(n: usize, p: usize) -> Self {
        Self {
            acc: vec![0.0; p],
            block: vec![0.0; p],
            weights: vec![0.0; n],
        }
    }
}

enum DrawKind {
    Empirical,
    Multiplier(WeightSampler),
}

/// Data prepared once for repeated draws under one scheme.
pub struct Bootstrapper {
    n: usize,
    p: usize,
    /// Centered rows, or raw rows for the uncentered multiplier variant.
    rows: Vec<f64>,
    /// `sqrt(n) t_j`
    shift: Vec<f64>,
    inv_sqrt_n: f64,
    abs_variant: bool,
    kind: DrawKind,
    scheme: BootstrapScheme,
}

impl Bootstrapper {
    pub fn new(x: &SampleMatrix, t: &ShiftVector, scheme: &BootstrapScheme) -> Result<Self> {
        check_len("shift vector length (p)", x.p(), t.len())?;
        scheme.validate()?;
        let (rows, kind) = match &scheme.kind {
            BootstrapKind::Empirical => (x.centered().as_slice().to_vec(), DrawKind::Empirical),
            BootstrapKind::Multiplier { weights, centered } => {
                let rows = if *centered {
                    x.centered().as_slice().to_vec()
                } else {
                    x.as_slice().to_vec()
                };
                (rows, DrawKind::Multiplier(WeightSampler::new(weights)?))
            }
        };
        let sqrt_n = (x.n() as f64).sqrt();
        Ok(Self {
            n: x.n(),
            p: x.p(),
            rows,
            shift: t.as_slice().iter().map(|v| sqrt_n * v).collect(),
            inv_sqrt_n: 1.0 / sqrt_n,
            abs_variant: scheme.abs_variant,
            kind,
            scheme: *scheme,
        })
    }

    pub fn scheme(&self) -> &BootstrapScheme {
        &self.scheme
    }

    pub fn scratch(&self) -> DrawScratch {
        DrawScratch::new(self.n, self.p)
    }

    /// One conditional draw of `T*` given the data.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut DrawScratch) -> f64 {
        let p = self.p;
        let DrawScratch { acc, block, weights } = scratch;
        acc.fill(0.0);
        match &self.kind {
            DrawKind::Empirical => {
                for start in (0..self.n).step_by(ACC_BLOCK) {
                    let len = ACC_BLOCK.min(self.n - start);
                    block.fill(0.0);
                    for _ in 0..len {
                        let i = rng.random_range(0..self.n);
                        let row = &self.rows[i * p..(i + 1) * p];
                        block.iter_mut().zip(row).for_each(|(b, x)| *b += x);
                    }
                    acc.iter_mut().zip(block.iter()).for_each(|(a, b)| *a += b);
                }
            }
            DrawKind::Multiplier(sampler) => {
                sampler.fill(rng, weights);
                for (chunk, w) in self
                    .rows
                    .chunks(ACC_BLOCK * p)
                    .zip(weights.chunks(ACC_BLOCK))
                {
                    block.fill(0.0);
                    for (row, &e) in chunk.chunks_exact(p).zip(w) {
                        block.iter_mut().zip(row).for_each(|(b, x)| *b += e * x);
                    }
                    acc.iter_mut().zip(block.iter()).for_each(|(a, b)| *a += b);
                }
            }
        }
        self.reduce(acc)
    }

    fn reduce(&self, sums: &[f64]) -> f64 {
        let coords = sums
            .iter()
            .zip(&self.shift)
            .map(|(s, shift)| s * self.inv_sqrt_n + shift);
        if self.abs_variant {
            coords.map(f64::abs).fold(f64::NEG_INFINITY, f64::max)
        } else {
            coords.fold(f64::NEG_INFINITY, f64::max)
        }
    }

    /// `B` draws in replication order; replication `b` uses `stream.child(b)`.
    pub fn draws(&self, stream: RngStream) -> Vec<f64> {
        (0..self.scheme.num_boot)
            .into_par_iter()
            .map_init(
                || self.scratch(),
                |scratch, b| self.draw(&mut stream.child(b as u64).rng(), scratch),
            )
            .collect()
    }

    /// `(1 - alpha)` empirical quantile of [`Self::draws`]. Draws are kept when
    /// `B <= retain_limit`.
    pub fn critical_value(&self, alpha: f64, stream: RngStream, retain_limit: usize) -> Result<CriticalValueResult> {
        check_level("alpha", alpha)?;
        let mut draws = self.draws(stream);
        let critical_value = empirical_quantile_in_place(&mut draws, 1.0 - alpha)?;
        Ok(CriticalValueResult {
            critical_value,
            alpha,
            scheme: self.scheme,
            stream,
            draws: (draws.len() <= retain_limit).then_some(draws),
        })
    }
}

/// One empirical-bootstrap draw of `T*`.
pub fn empirical_bootstrap_stat<R: Rng + ?Sized>(x: &SampleMatrix, t: &ShiftVector, rng: &mut R) -> Result<f64> {
    let boot = Bootstrapper::new(x, t, &BootstrapScheme::empirical(1))?;
    Ok(boot.draw(rng, &mut boot.scratch()))
}

/// One multiplier-bootstrap draw of `T*` with fresh weights from `family`.
pub fn multiplier_bootstrap_stat<R: Rng + ?Sized>(
    x: &SampleMatrix,
    t: &ShiftVector,
    family: &WeightFamily,
    rng: &mut R,
) -> Result<f64> {
    let boot = Bootstrapper::new(x, t, &BootstrapScheme::multiplier(*family, 1))?;
    Ok(boot.draw(rng, &mut boot.scratch()))
}

/// Bootstrap critical value `c_{1-alpha}`: the `ceil((1 - alpha) B)`-th order
/// statistic of `B` conditional draws.
pub fn critical_value(
    x: &SampleMatrix,
    t: &ShiftVector,
    alpha: f64,
    scheme: &BootstrapScheme,
    stream: RngStream,
) -> Result<CriticalValueResult> {
    critical_value_with_budget(x, t, alpha, scheme, stream, DEFAULT_RETAIN_LIMIT)
}

pub fn critical_value_with_budget(
    x: &SampleMatrix,
    t: &ShiftVector,
    alpha: f64,
    scheme: &BootstrapScheme,
    stream: RngStream,
    retain_limit: usize,
) -> Result<CriticalValueResult> {
    check_level("alpha", alpha)?;
    Bootstrapper::new(x, t, scheme)?.critical_value(alpha, stream, retain_limit)
}

/// Feasible Gaussian critical value: the quantile of `max_j (G_j + t_j)` with
/// `G ~ N(0, Sigma_hat)`, obtained as the Gaussian-weight multiplier bootstrap
/// (same law, no factorization of `Sigma_hat`).
pub fn gaussian_critical_value(
    x: &SampleMatrix,
    t: &ShiftVector,
    alpha: f64,
    num_boot: usize,
    stream: RngStream,
) -> Result<CriticalValueResult> {
    critical_value(x, t, alpha, &BootstrapScheme::multiplier(WeightFamily::Gaussian, num_boot), stream)
}

/// Reject iff `statistic > critical_value + eta`.
pub fn decide(statistic: f64, critical_value: f64, eta: f64) -> Result<TestDecision> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::invalid("eta", eta, "must be finite and non-negative"));
    }
    Ok(TestDecision {
        statistic,
        critical_value,
        eta,
        reject: statistic > critical_value + eta,
    })
}
