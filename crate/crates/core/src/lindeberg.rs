//! Randomized Lindeberg interpolation and the exchangeable tail inequality,
//! as constructions that can be sampled and, for small `n`, enumerated.
//!
//! Interpolation: for a uniform permutation `sigma` of `{1..n}` and
//! `U ~ U[0, 1]` independent of it, let `m = sigma^{-1}(k)`. Then
//! `W_k = sum_{j<m} X_{sigma(j)} + sum_{j>m} Y_{sigma(j)}` plus `X_k` when
//! `U <= m / (n + 1)` and `Y_k` otherwise. The selector `eps in {0,1}^n`
//! marks which rows came from `X`; its law does not depend on `k`, and
//! `sum eps` is uniform on `{0..n}`.
//!
//! Tail check: for exchangeable `|X_i| <= 1`,
//! `P(|sum a_i X_i| > |sum a_i| + t) <= 2 exp(-t^2 / (32 sum a_i^2))`.
//! Exchangeable sequences are realized as uniform permutations of a fixed pool,
//! so the check is a spot-check of the inequality, not a proof of it.

use std::collections::BTreeMap;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::distributions::RngStream;
use crate::stats::check_len;
use crate::{Error, Result};

/// Largest `n` accepted by the `(sigma, U)` enumeration (`(n + 1)!` cells).
pub const MAX_ENUMERATION_N: usize = 9;
/// Largest `n` for which per-pattern counts are tracked by Monte Carlo.
pub const MAX_PATTERN_N: usize = 16;

const TAIL_CHUNK: usize = 8192;

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationDraw {
    /// 1-based index of the swapped row.
    pub k: usize,
    pub epsilon: Vec<bool>,
    pub w: Vec<f64>,
}

/// Selector pattern for one `(sigma, U)` cell. `order` lists `sigma(1..n)`
/// 0-based; `u_cell = s` means `U` lies in `[s/(n+1), (s+1)/(n+1))`.
fn selector(order: &[usize], k: usize, take_x: impl FnOnce(usize) -> bool) -> (usize, Vec<bool>) {
    let n = order.len();
    let m = order.iter().position(|&i| i == k).expect("permutation contains k") + 1;
    let mut eps = vec![false; n];
    for &i in &order[..m - 1] {
        eps[i] = true;
    }
    eps[k] = take_x(m);
    (m, eps)
}

fn check_rows(x_rows: &[Vec<f64>], y_rows: &[Vec<f64>], k: usize) -> Result<usize> {
    let n = x_rows.len();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    check_len("Y rows (n)", n, y_rows.len())?;
    let p = x_rows[0].len();
    for row in x_rows.iter().chain(y_rows) {
        check_len("row length (p)", p, row.len())?;
    }
    if !(1..=n).contains(&k) {
        return Err(Error::invalid("k", k as f64, format!("must lie in 1..={n}")));
    }
    Ok(p)
}

/// One draw of `W_k` (`k` is 1-based).
pub fn lindeberg_draw<R: Rng + ?Sized>(
    x_rows: &[Vec<f64>],
    y_rows: &[Vec<f64>],
    k: usize,
    rng: &mut R,
) -> Result<InterpolationDraw> {
    let p = check_rows(x_rows, y_rows, k)?;
    let n = x_rows.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let u: f64 = rng.random();
    let (m, epsilon) = selector(&order, k - 1, |m| u <= m as f64 / (n + 1) as f64);

    let mut w = vec![0.0; p];
    let mut add = |row: &[f64]| w.iter_mut().zip(row).for_each(|(a, b)| *a += b);
    for &i in &order[..m - 1] {
        add(&x_rows[i]);
    }
    for &i in &order[m..] {
        add(&y_rows[i]);
    }
    add(if epsilon[k - 1] { &x_rows[k - 1] } else { &y_rows[k - 1] });
    Ok(InterpolationDraw { k, epsilon, w })
}

/// Pattern as a bit mask, bit `i` set when `eps_i = 1`.
fn mask(eps: &[bool]) -> u32 {
    eps.iter().enumerate().fold(0, |m, (i, &e)| m | (u32::from(e) << i))
}

/// Exact selector law over all `n! (n + 1)` equiprobable `(sigma, U-cell)` pairs.
///
/// `counts[mask]` is the number of cells producing the pattern; the total is
/// `(n + 1)!`, so `P(eps) = counts[mask] / (n + 1)!`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpsilonEnumeration {
    pub n: usize,
    pub k: usize,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl EpsilonEnumeration {
    pub fn probability(&self, eps_mask: u32) -> f64 {
        self.counts[eps_mask as usize] as f64 / self.total as f64
    }

    /// Cell counts aggregated by `s = sum eps`.
    pub fn sum_counts(&self) -> Vec<u64> {
        let mut out = vec![0; self.n + 1];
        for (m, &c) in self.counts.iter().enumerate() {
            out[m.count_ones() as usize] += c;
        }
        out
    }
}

pub fn enumerate_epsilon_law(n: usize, k: usize) -> Result<EpsilonEnumeration> {
    if !(1..=MAX_ENUMERATION_N).contains(&n) {
        return Err(Error::EnumerationTooLarge(format!(
            "interpolation enumeration supports 1 <= n <= {MAX_ENUMERATION_N}, got n = {n}"
        )));
    }
    if !(1..=n).contains(&k) {
        return Err(Error::invalid("k", k as f64, format!("must lie in 1..={n}")));
    }
    let mut counts = vec![0u64; 1 << n];
    let mut total = 0u64;
    for order in (0..n).permutations(n) {
        for u_cell in 0..=n {
            // U in [s/(n+1), (s+1)/(n+1)) satisfies U <= m/(n+1) iff s < m
            let (_, eps) = selector(&order, k - 1, |m| u_cell < m);
            counts[mask(&eps) as usize] += 1;
            total += 1;
        }
    }
    Ok(EpsilonEnumeration { n, k, counts, total })
}

/// Exact law of the scalar `W_k` for scalar rows: `(value, probability)`
/// sorted by value, equal values merged.
pub fn exact_w_law(x: &[f64], y: &[f64], k: usize) -> Result<Vec<(f64, f64)>> {
    check_len("Y rows (n)", x.len(), y.len())?;
    let law = enumerate_epsilon_law(x.len(), k)?;
    let mut by_value: BTreeMap<u64, (f64, u64)> = BTreeMap::new();
    for (m, &c) in law.counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let w: f64 = (0..x.len())
            .map(|i| if m >> i & 1 == 1 { x[i] } else { y[i] })
            .sum();
        // order-preserving key for finite floats
        let bits = w.to_bits();
        let key = if w.is_sign_negative() { !bits } else { bits | 1 << 63 };
        by_value.entry(key).or_insert((w, 0)).1 += c;
    }
    Ok(by_value
        .into_values()
        .map(|(w, c)| (w, c as f64 / law.total as f64))
        .collect())
}

/// Monte Carlo histogram of `s = sum eps` (and of full patterns for small `n`).
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonHistogram {
    pub n: usize,
    pub reps: u64,
    pub sum_counts: Vec<u64>,
    /// Indexed by pattern mask; present when `n <= MAX_PATTERN_N`.
    pub pattern_counts: Option<Vec<u64>>,
    /// Exact `P(sum eps = s) = 1 / (n + 1)`.
    pub exact: f64,
}

impl EpsilonHistogram {
    pub fn frequencies(&self) -> Vec<f64> {
        self.sum_counts
            .iter()
            .map(|&c| c as f64 / self.reps as f64)
            .collect()
    }
}

/// Samples the selector of `W_1` `reps` times. Rep `r` uses `stream.child(r)`.
pub fn lindeberg_epsilon_law(n: usize, reps: u64, stream: RngStream) -> Result<EpsilonHistogram> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if reps == 0 {
        return Err(Error::invalid("reps", 0.0, "need at least one repetition"));
    }
    let track = n <= MAX_PATTERN_N;
    let chunks = reps.div_ceil(TAIL_CHUNK as u64);
    let partial: Vec<(Vec<u64>, Vec<u64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream.child(c).rng();
            let mut sums = vec![0u64; n + 1];
            let mut patterns = vec![0u64; if track { 1 << n } else { 0 }];
            let mut order: Vec<usize> = (0..n).collect();
            let len = (reps - c * TAIL_CHUNK as u64).min(TAIL_CHUNK as u64);
            for _ in 0..len {
                order.shuffle(&mut rng);
                let u: f64 = rng.random();
                let (_, eps) = selector(&order, 0, |m| u <= m as f64 / (n + 1) as f64);
                sums[eps.iter().filter(|&&e| e).count()] += 1;
                if track {
                    patterns[mask(&eps) as usize] += 1;
                }
            }
            (sums, patterns)
        })
        .collect();
    let mut sum_counts = vec![0u64; n + 1];
    let mut pattern_counts = vec![0u64; if track { 1 << n } else { 0 }];
    for (s, p) in partial {
        sum_counts.iter_mut().zip(s).for_each(|(a, b)| *a += b);
        pattern_counts.iter_mut().zip(p).for_each(|(a, b)| *a += b);
    }
    Ok(EpsilonHistogram {
        n,
        reps,
        sum_counts,
        pattern_counts: track.then_some(pattern_counts),
        exact: 1.0 / (n + 1) as f64,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailCheckReport {
    pub weights: Vec<f64>,
    pub threshold: f64,
    pub empirical_tail: f64,
    /// `2 exp(-t^2 / (32 sum a^2))`, or 0 when every weight is 0.
    pub bound: f64,
    pub reps: u64,
    pub exceedances: u64,
}

impl TailCheckReport {
    /// Binomial standard error of a tail frequency equal to the bound.
    pub fn bound_std_error(&self) -> f64 {
        let b = self.bound.min(1.0);
        (b * (1.0 - b) / self.reps as f64).sqrt()
    }
}

pub fn tail_bound(weights: &[f64], t: f64) -> f64 {
    let ss: f64 = weights.iter().map(|a| a * a).sum();
    if ss == 0.0 {
        0.0
    } else {
        2.0 * (-t * t / (32.0 * ss)).exp()
    }
}

/// Fraction of `reps` uniform permutations `X` of `pool` with
/// `|sum a_i X_i| > |sum a_i| + t`, next to the exponential bound.
pub fn exchangeable_tail_check(
    weights: &[f64],
    pool: &[f64],
    t: f64,
    reps: u64,
    stream: RngStream,
) -> Result<TailCheckReport> {
    check_len("value pool length (n)", weights.len(), pool.len())?;
    if let Some(&v) = pool.iter().find(|v| !(v.abs() <= 1.0)) {
        return Err(Error::invalid("pool value", v, "exchangeable values must satisfy |x| <= 1"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid("t", t, "must be positive"));
    }
    if reps == 0 {
        return Err(Error::invalid("reps", 0.0, "need at least one repetition"));
    }
    let level = weights.iter().sum::<f64>().abs() + t;
    let chunks = reps.div_ceil(TAIL_CHUNK as u64);
    let exceedances: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream.child(c).rng();
            let mut values = pool.to_vec();
            let len = (reps - c * TAIL_CHUNK as u64).min(TAIL_CHUNK as u64);
            (0..len)
                .filter(|_| {
                    values.shuffle(&mut rng);
                    let s: f64 = weights.iter().zip(&values).map(|(a, x)| a * x).sum();
                    s.abs() > level
                })
                .count() as u64
        })
        .sum();
    Ok(TailCheckReport {
        weights: weights.to_vec(),
        threshold: t,
        empirical_tail: exceedances as f64 / reps as f64,
        bound: tail_bound(weights, t),
        reps,
        exceedances,
    })
}

/// One cell of the tail-bound dominance grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TailCase {
    pub shape: &'static str,
    pub weights: Vec<f64>,
    pub pool: Vec<f64>,
    pub t: f64,
}

/// `n` in {10, 20, 50}, `t` in {0.5, 1, 2, 4} times `sqrt(sum a^2)`, and three
/// weight/pool shapes: alternating signs on a balanced +-1 pool, linear weights
/// on an evenly spaced pool in [-1, 1], and two unit weights on a balanced pool.
pub fn tail_grid() -> Vec<TailCase> {
    let mut out = Vec::new();
    for n in [10usize, 20, 50] {
        let balanced: Vec<f64> = (0..n).map(|i| if i < n / 2 { 1.0 } else { -1.0 }).collect();
        let spaced: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
        let shapes = [
            ("alternating", (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect(), balanced.clone()),
            ("linear", (1..=n).map(|i| i as f64 / n as f64).collect(), spaced),
            ("two-point", (0..n).map(|i| if i < 2 { 1.0 } else { 0.0 }).collect::<Vec<f64>>(), balanced),
        ];
        for (shape, weights, pool) in shapes {
            let scale = weights.iter().map(|a| a * a).sum::<f64>().sqrt();
            for mult in [0.5, 1.0, 2.0, 4.0] {
                out.push(TailCase {
                    shape,
                    weights: weights.clone(),
                    pool: pool.clone(),
                    t: mult * scale,
                });
            }
        }
    }
    out
}
