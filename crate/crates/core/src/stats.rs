//! Sample matrices, the max statistic and the empirical quantile.
//!
//! Indexing is 0-based throughout the API; error messages and reports use
//! 1-based row/column numbers.

use crate::{Error, Result};

/// Rows per leaf block in the blocked pairwise column summation.
const SUM_BLOCK: usize = 32;

/// An `n x p` matrix of observations stored row-major. Row = observation.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl SampleMatrix {
    pub fn new(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::DimensionMismatch {
                axis: "rows",
                expected: 1,
                found: 0,
            });
        }
        if p == 0 {
            return Err(Error::DimensionMismatch {
                axis: "columns",
                expected: 1,
                found: 0,
            });
        }
        if values.len() != n * p {
            return Err(Error::DimensionMismatch {
                axis: "values",
                expected: n * p,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / p + 1,
                col: pos % p + 1,
            });
        }
        Ok(Self { n, p, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let p = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * p);
        for row in rows {
            let row = row.as_ref();
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    axis: "columns",
                    expected: p,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), p, values)
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of coordinates.
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.values.chunks_exact(self.p)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Column means `X̄`.
    pub fn column_means(&self) -> Vec<f64> {
        let inv_n = 1.0 / self.n as f64;
        let mut sums = column_sums(&self.values, self.p, |_, x| x);
        sums.iter_mut().for_each(|s| *s *= inv_n);
        sums
    }

    /// Copy of the matrix with every row centered at the column means.
    pub fn centered(&self) -> SampleMatrix {
        let means = self.column_means();
        let values = self
            .rows()
            .flat_map(|row| row.iter().zip(&means).map(|(x, m)| x - m))
            .collect();
        SampleMatrix {
            n: self.n,
            p: self.p,
            values,
        }
    }

    /// Every entry multiplied by `c`.
    pub fn scaled(&self, c: f64) -> SampleMatrix {
        SampleMatrix {
            n: self.n,
            p: self.p,
            values: self.values.iter().map(|x| x * c).collect(),
        }
    }
}

macro_rules! real_vector {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(Vec<f64>);

        impl $name {
            pub fn new(values: Vec<f64>) -> Result<Self> {
                if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { row: 1, col: pos + 1 });
                }
                Ok(Self(values))
            }

            pub fn zeros(p: usize) -> Self {
                Self(vec![0.0; p])
            }

            pub fn constant(p: usize, value: f64) -> Self {
                Self(vec![value; p])
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }

            pub fn negated(&self) -> Self {
                Self(self.0.iter().map(|v| -v).collect())
            }
        }
    };
}

real_vector!(
    /// The shift vector `t` added inside the max.
    ShiftVector
);
real_vector!(
    /// The mean vector `mu` used to center the statistic.
    MeanVector
);

/// A symmetric `p x p` covariance matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    p: usize,
    values: Vec<f64>,
}

impl CovarianceEstimate {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.p + k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.p).map(|j| self.get(j, j)).collect()
    }
}

pub(crate) fn check_len(axis: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            axis,
            expected,
            found,
        });
    }
    Ok(())
}

/// Column sums of `f(j, x_ij)` over the rows of a row-major buffer.
///
/// Rows are split recursively in halves down to blocks of [`SUM_BLOCK`] rows,
/// which bounds the rounding error growth by `O(log n)`.
pub(crate) fn column_sums<F>(values: &[f64], p: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, f64) -> f64 + Copy,
{
    let n = values.len() / p;
    let mut out = vec![0.0; p];
    pairwise_into(values, p, n, f, &mut out);
    out
}

fn pairwise_into<F>(values: &[f64], p: usize, n: usize, f: F, out: &mut [f64])
where
    F: Fn(usize, f64) -> f64 + Copy,
{
    if n <= SUM_BLOCK {
        for row in values.chunks_exact(p) {
            for (j, (acc, &x)) in out.iter_mut().zip(row).enumerate() {
                *acc += f(j, x);
            }
        }
        return;
    }
    let half = n / 2;
    let (top, bottom) = values.split_at(half * p);
    pairwise_into(top, p, half, f, out);
    let mut rest = vec![0.0; p];
    pairwise_into(bottom, p, n - half, f, &mut rest);
    out.iter_mut().zip(&rest).for_each(|(a, b)| *a += b);
}

/// Scaled column sums `n^{-1/2} sum_i (X_ij - mu_j + t_j)`.
fn shifted_column_stats(x: &SampleMatrix, mu: &MeanVector, t: &ShiftVector) -> Result<Vec<f64>> {
    check_len("mean vector length (p)", x.p(), mu.len())?;
    check_len("shift vector length (p)", x.p(), t.len())?;
    let (mu, t) = (mu.as_slice(), t.as_slice());
    let scale = 1.0 / (x.n() as f64).sqrt();
    let mut sums = column_sums(x.as_slice(), x.p(), |j, v| v - mu[j] + t[j]);
    sums.iter_mut().for_each(|s| *s *= scale);
    Ok(sums)
}

/// `T_n = max_j n^{-1/2} sum_i (X_ij - mu_j + t_j)`.
pub fn max_statistic(x: &SampleMatrix, mu: &MeanVector, t: &ShiftVector) -> Result<f64> {
    let stats = shifted_column_stats(x, mu, t)?;
    Ok(stats.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// The max statistic applied to the `2p` coordinates obtained by stacking
/// `X_i - mu + t` and its negation, i.e. `max_j |n^{-1/2} sum_i (X_ij - mu_j + t_j)|`.
pub fn max_abs_statistic(x: &SampleMatrix, mu: &MeanVector, t: &ShiftVector) -> Result<f64> {
    let stats = shifted_column_stats(x, mu, t)?;
    Ok(stats.into_iter().map(f64::abs).fold(f64::NEG_INFINITY, f64::max))
}

/// 1-based rank `ceil(gamma * len)` of the order statistic returned by
/// [`empirical_quantile`]. Products within `1e-9` relative of an integer are
/// snapped to it so that e.g. `0.9 * 300` selects the 270th value.
pub fn quantile_rank(gamma: f64, len: usize) -> usize {
    let target = gamma * len as f64;
    let nearest = target.round();
    let rank = if (target - nearest).abs() <= 1e-9 * target.max(1.0) {
        nearest
    } else {
        target.ceil()
    };
    (rank as usize).clamp(1, len)
}

pub(crate) fn check_level(name: &'static str, gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(name, gamma, "must lie in the open interval (0, 1)"));
    }
    Ok(())
}

/// `inf{t : gamma <= F_hat(t)}` for the empirical CDF of `samples`, i.e. the
/// `ceil(gamma * B)`-th order statistic. No interpolation.
pub fn empirical_quantile(samples: &[f64], gamma: f64) -> Result<f64> {
    let mut scratch = samples.to_vec();
    empirical_quantile_in_place(&mut scratch, gamma)
}

/// Same as [`empirical_quantile`] but partially reorders `samples` by selection.
pub fn empirical_quantile_in_place(samples: &mut [f64], gamma: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    check_level("gamma", gamma)?;
    if let Some(pos) = samples.iter().position(|v| v.is_nan()) {
        return Err(Error::NonFinite { row: pos + 1, col: 1 });
    }
    let rank = quantile_rank(gamma, samples.len());
    let (_, value, _) = samples.select_nth_unstable_by(rank - 1, f64::total_cmp);
    Ok(*value)
}

/// `Sigma_hat = n^{-1} sum_i (X_i - X̄)(X_i - X̄)'` (divisor `n`).
pub fn covariance_estimate(x: &SampleMatrix) -> CovarianceEstimate {
    let centered = x.centered();
    let p = x.p();
    let inv_n = 1.0 / x.n() as f64;
    let mut values = vec![0.0; p * p];
    for row in centered.rows() {
        for j in 0..p {
            let xj = row[j];
            let out = &mut values[j * p..(j + 1) * p];
            for k in j..p {
                out[k] += xj * row[k];
            }
        }
    }
    for j in 0..p {
        for k in j..p {
            let v = values[j * p + k] * inv_n;
            values[j * p + k] = v;
            values[k * p + j] = v;
        }
    }
    CovarianceEstimate { p, values }
}
