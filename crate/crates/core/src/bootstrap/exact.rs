//! Exact conditional laws of `T*` for small `n`, used as an oracle.
//!
//! The empirical bootstrap is enumerated over multisets of resampled rows
//! (count vectors summing to `n`, weighted by their multinomial probability)
//! rather than the `n^n` ordered resamples; Rademacher multipliers are
//! enumerated over all `2^n` sign patterns.

use super::BootstrapKind;
use crate::distributions::WeightFamily;
use crate::stats::{check_len, check_level, SampleMatrix, ShiftVector};
use crate::{Error, Result};

pub const MAX_EXACT_EMPIRICAL_N: usize = 8;
pub const MAX_EXACT_RADEMACHER_N: usize = 12;

/// Atoms closer than this (relative) are merged.
const MERGE_TOL: f64 = 1e-12;

/// A finite law given by sorted, distinct atoms and their probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactLaw {
    atoms: Vec<(f64, f64)>,
}

impl ExactLaw {
    fn from_weighted(mut values: Vec<(f64, f64)>) -> Self {
        values.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(values.len());
        for (v, w) in values {
            match atoms.last_mut() {
                Some((last, mass)) if (v - *last).abs() <= MERGE_TOL * last.abs().max(1.0) => *mass += w,
                _ => atoms.push((v, w)),
            }
        }
        Self { atoms }
    }

    /// `(value, probability)` pairs in increasing order of value.
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn cdf(&self, t: f64) -> f64 {
        self.atoms.iter().take_while(|(v, _)| *v <= t).map(|(_, w)| w).sum()
    }

    /// `inf{t : gamma <= F(t)}`.
    pub fn quantile(&self, gamma: f64) -> Result<f64> {
        check_level("gamma", gamma)?;
        let mut cumulative = 0.0;
        for &(v, w) in &self.atoms {
            cumulative += w;
            if gamma <= cumulative + MERGE_TOL {
                return Ok(v);
            }
        }
        self.atoms.last().map(|a| a.0).ok_or(Error::EmptySample)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactCriticalValue {
    pub critical_value: f64,
    pub alpha: f64,
    pub law: ExactLaw,
}

struct Reducer<'a> {
    p: usize,
    shift: Vec<f64>,
    inv_sqrt_n: f64,
    abs_variant: bool,
    rows: &'a [f64],
}

impl Reducer<'_> {
    fn value(&self, sums: &[f64]) -> f64 {
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

    fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.p..(i + 1) * self.p]
    }
}

/// Exact conditional law of `T*` given `x` for the empirical bootstrap
/// (`n <= 8`) or Rademacher multipliers (`n <= 12`).
pub fn exact_bootstrap_law(x: &SampleMatrix, t: &ShiftVector, kind: &BootstrapKind, abs_variant: bool) -> Result<ExactLaw> {
    check_len("shift vector length (p)", x.p(), t.len())?;
    let n = x.n();
    let sqrt_n = (n as f64).sqrt();
    let centered;
    let rows = match kind {
        BootstrapKind::Multiplier { centered: false, .. } => x.as_slice(),
        _ => {
            centered = x.centered();
            centered.as_slice()
        }
    };
    let reducer = Reducer {
        p: x.p(),
        shift: t.as_slice().iter().map(|v| sqrt_n * v).collect(),
        inv_sqrt_n: 1.0 / sqrt_n,
        abs_variant,
        rows,
    };
    match kind {
        BootstrapKind::Empirical => {
            if n > MAX_EXACT_EMPIRICAL_N {
                return Err(Error::EnumerationTooLarge(format!(
                    "empirical bootstrap enumeration supports n <= {MAX_EXACT_EMPIRICAL_N}, got n = {n}"
                )));
            }
            Ok(enumerate_empirical(&reducer, n))
        }
        BootstrapKind::Multiplier {
            weights: WeightFamily::Rademacher,
            ..
        } => {
            if n > MAX_EXACT_RADEMACHER_N {
                return Err(Error::EnumerationTooLarge(format!(
                    "Rademacher enumeration supports n <= {MAX_EXACT_RADEMACHER_N}, got n = {n}"
                )));
            }
            Ok(enumerate_rademacher(&reducer, n))
        }
        BootstrapKind::Multiplier { weights, .. } => Err(Error::EnumerationTooLarge(format!(
            "{} weights are continuous; exact mode needs empirical or rademacher",
            weights.label()
        ))),
    }
}

fn enumerate_empirical(reducer: &Reducer<'_>, n: usize) -> ExactLaw {
    let log_fact: Vec<f64> = (0..=n)
        .scan(0.0, |acc, k| {
            if k > 0 {
                *acc += (k as f64).ln();
            }
            Some(*acc)
        })
        .collect();
    let log_total = n as f64 * (n as f64).ln();
    let mut counts = vec![0usize; n];
    let mut sums = vec![0.0; reducer.p];
    let mut out = Vec::new();
    compositions(n, 0, n, &mut counts, &mut |counts| {
        sums.fill(0.0);
        let mut log_w = log_fact[n] - log_total;
        for (i, &c) in counts.iter().enumerate() {
            if c > 0 {
                log_w -= log_fact[c];
                let row = reducer.row(i);
                sums.iter_mut().zip(row).for_each(|(s, x)| *s += c as f64 * x);
            }
        }
        out.push((reducer.value(&sums), log_w.exp()));
    });
    ExactLaw::from_weighted(out)
}

/// Visits every vector of `n` non-negative counts summing to `total`.
fn compositions(n: usize, idx: usize, remaining: usize, counts: &mut [usize], visit: &mut impl FnMut(&[usize])) {
    if idx == n - 1 {
        counts[idx] = remaining;
        visit(counts);
        return;
    }
    for c in 0..=remaining {
        counts[idx] = c;
        compositions(n, idx + 1, remaining - c, counts, visit);
    }
}

fn enumerate_rademacher(reducer: &Reducer<'_>, n: usize) -> ExactLaw {
    let weight = 0.5f64.powi(n as i32);
    let mut sums = vec![0.0; reducer.p];
    let out = (0u32..1 << n)
        .map(|mask| {
            sums.fill(0.0);
            for i in 0..n {
                let sign = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
                sums.iter_mut().zip(reducer.row(i)).for_each(|(s, x)| *s += sign * x);
            }
            (reducer.value(&sums), weight)
        })
        .collect();
    ExactLaw::from_weighted(out)
}

/// `(1 - alpha)` quantile of the exact conditional law.
pub fn exact_critical_value(
    x: &SampleMatrix,
    t: &ShiftVector,
    alpha: f64,
    kind: &BootstrapKind,
    abs_variant: bool,
) -> Result<ExactCriticalValue> {
    check_level("alpha", alpha)?;
    let law = exact_bootstrap_law(x, t, kind, abs_variant)?;
    Ok(ExactCriticalValue {
        critical_value: law.quantile(1.0 - alpha)?,
        alpha,
        law,
    })
}
