//! Normal CDF, Weibull and Gamma quantile functions (scale 1).

use statrs::function::erf::erfc_inv;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::{Error, Result};

const MAX_ITER: usize = 200;
/// Acceptance threshold `|P(k, x) - u|` for the quantile inversion.
const QUANTILE_TOL: f64 = 1e-10;
const EPS: f64 = f64::EPSILON;
const FPMIN: f64 = f64::MIN_POSITIVE / EPS;

/// `Phi(x) = erfc(-x / sqrt 2) / 2`.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Inverse of [`std_normal_cdf`] for `p` in `(0, 1)`, polished by Newton
/// steps on whichever tail is smaller.
pub fn std_normal_quantile(p: f64) -> f64 {
    if !(p > 0.0 && p < 1.0) {
        return match p {
            0.0 => f64::NEG_INFINITY,
            1.0 => f64::INFINITY,
            _ => f64::NAN,
        };
    }
    let (tail, sign) = if p <= 0.5 { (p, 1.0) } else { (1.0 - p, -1.0) };
    let mut z = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * tail);
    for _ in 0..2 {
        let density = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if density == 0.0 {
            break;
        }
        z -= (std_normal_cdf(z) - tail) / density;
    }
    sign * z
}

fn check_shape(k: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::invalid("shape k", k, "must be positive and finite"));
    }
    Ok(())
}

fn check_unit(u: f64) -> Result<()> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::invalid("u", u, "must lie in [0, 1)"));
    }
    Ok(())
}

/// Checks a lower/upper tail pair and reports which one is the smaller.
fn check_tails(p: f64, q: f64) -> Result<bool> {
    if !(0.0..=1.0).contains(&p) || !(q > 0.0 && q <= 1.0) || (p + q - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(
            "tail pair",
            p,
            format!("lower tail {p} and upper tail {q} must be probabilities summing to 1"),
        ));
    }
    Ok(p <= 0.5)
}

/// Weibull(shape `k`, scale 1) quantile `(-ln(1 - u))^{1/k}`.
pub fn weibull_quantile(u: f64, k: f64) -> Result<f64> {
    check_unit(u)?;
    check_shape(k)?;
    Ok((-(-u).ln_1p()).powf(1.0 / k))
}

/// Weibull quantile given both tails `p = u` and `q = 1 - u`; the smaller tail is
/// used so that values far in the upper tail keep full precision.
pub fn weibull_quantile_tails(p: f64, q: f64, k: f64) -> Result<f64> {
    check_shape(k)?;
    let lower = check_tails(p, q)?;
    let h = if lower { -(-p).ln_1p() } else { -q.ln() };
    Ok(h.powf(1.0 / k))
}

/// Mean `Gamma(1 + 1/k)` of the unit-scale Weibull distribution.
pub fn weibull_mean(k: f64) -> f64 {
    gamma(1.0 + 1.0 / k)
}

/// Mean `k` of the unit-scale Gamma distribution.
pub fn gamma_mean(k: f64) -> f64 {
    k
}

/// Regularized lower incomplete gamma `P(k, x)`.
pub fn regularized_gamma_p(k: f64, x: f64) -> Result<f64> {
    regularized_gamma_pq(k, x).map(|(p, _)| p)
}

/// `(P(k, x), Q(k, x))`. Series for `x < k + 1`, Lentz continued fraction
/// for the upper tail otherwise; the complement is formed from the accurate one.
pub fn regularized_gamma_pq(k: f64, x: f64) -> Result<(f64, f64)> {
    check_shape(k)?;
    if !(x >= 0.0) {
        return Err(Error::invalid("x", x, "must be non-negative"));
    }
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if x.is_infinite() {
        return Ok((1.0, 0.0));
    }
    let log_prefactor = -x + k * x.ln() - ln_gamma(k);
    if x < k + 1.0 {
        let p = lower_series(k, x)? * log_prefactor.exp();
        Ok((p, 1.0 - p))
    } else {
        let q = upper_continued_fraction(k, x)? * log_prefactor.exp();
        Ok((1.0 - q, q))
    }
}

fn lower_series(k: f64, x: f64) -> Result<f64> {
    let mut ap = k;
    let mut term = 1.0 / k;
    let mut sum = term;
    // x < k + 1 keeps the ratio x / (k + n) below 1; large k needs more terms
    let cap = MAX_ITER + (10.0 * k.sqrt()) as usize;
    for _ in 0..cap {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            return Ok(sum);
        }
    }
    Err(Error::NoConvergence { u: f64::NAN, k })
}

fn upper_continued_fraction(k: f64, x: f64) -> Result<f64> {
    let mut b = x + 1.0 - k;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let an = -(i as f64) * (i as f64 - k);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            return Ok(h);
        }
    }
    Err(Error::NoConvergence { u: f64::NAN, k })
}

/// Gamma(shape `k`, scale 1) quantile: `x` with `P(k, x) = u`.
pub fn gamma_quantile(u: f64, k: f64) -> Result<f64> {
    check_unit(u)?;
    check_shape(k)?;
    gamma_quantile_tails(u, 1.0 - u, k)
}

/// Gamma quantile given both tails; inverts `P` when the lower tail is the
/// smaller one and `Q` otherwise.
///
/// Newton iteration from a Wilson–Hilferty start, safeguarded by a bracket
/// that falls back to bisection (or doubling while the bracket is open).
pub fn gamma_quantile_tails(p: f64, q: f64, k: f64) -> Result<f64> {
    check_shape(k)?;
    let lower = check_tails(p, q)?;
    if p == 0.0 {
        return Ok(0.0);
    }
    if k == 1.0 {
        return Ok(if lower { -(-p).ln_1p() } else { -q.ln() });
    }
    let target = if lower { p } else { q };
    // increasing in x in both modes
    let residual = |x: f64| -> Result<f64> {
        let (lo_tail, up_tail) = regularized_gamma_pq(k, x)?;
        Ok(if lower { lo_tail - p } else { q - up_tail })
    };
    let ln_gamma_k = ln_gamma(k);
    let density = |x: f64| ((k - 1.0) * x.ln() - x - ln_gamma_k).exp();

    let mut x = initial_guess(p, q, k, lower);
    let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
    let mut f = residual(x)?;
    for _ in 0..MAX_ITER {
        if f == 0.0 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = density(x);
        let newton = x - f / slope;
        let next = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else if hi.is_finite() {
            0.5 * (lo + hi)
        } else {
            2.0 * x
        };
        let step = (next - x).abs();
        x = next;
        f = residual(x)?;
        if step <= 4.0 * EPS * x || (hi.is_finite() && hi - lo <= 4.0 * EPS * hi) {
            break;
        }
    }
    if f.abs() <= QUANTILE_TOL.max(QUANTILE_TOL * target) {
        Ok(x)
    } else {
        Err(Error::NoConvergence { u: p, k })
    }
}

fn initial_guess(p: f64, q: f64, k: f64, lower: bool) -> f64 {
    let z = if lower {
        std_normal_quantile(p)
    } else {
        -std_normal_quantile(q)
    };
    let c = 1.0 / (9.0 * k);
    let wilson_hilferty = k * (1.0 - c + z * c.sqrt()).powi(3);
    // P(k, x) ~ x^k / Gamma(k + 1) as x -> 0
    let small = ((p.ln() + ln_gamma(k + 1.0)) / k).exp();
    if wilson_hilferty > 0.0 && (!lower || wilson_hilferty > small) {
        wilson_hilferty
    } else {
        small.max(f64::MIN_POSITIVE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_reference_points() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_cdf(1.96) - 0.9750021048517795).abs() < 1e-12);
        for i in -80..=80 {
            let x = i as f64 * 0.1;
            assert!((std_normal_cdf(-x) - (1.0 - std_normal_cdf(x))).abs() <= 1e-14);
        }
    }

    #[test]
    fn normal_quantile_inverts_cdf() {
        for &u in &[1e-10, 0.001, 0.1, 0.5, 0.9, 0.999] {
            let z = std_normal_quantile(u);
            assert!((std_normal_cdf(z) - u).abs() <= 1e-12 * u.max(1e-3), "u = {u}");
        }
    }

    #[test]
    fn weibull_examples() {
        assert_eq!(weibull_quantile(0.0, 3.0).unwrap(), 0.0);
        let u = 1.0 - (-1.0f64).exp();
        assert!((weibull_quantile(u, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((weibull_quantile(0.5, 2.0).unwrap() - 0.8325546111576978).abs() < 1e-15);
        assert!(weibull_quantile(1.0, 2.0).is_err());
        assert!(weibull_quantile(-0.1, 2.0).is_err());
        assert!(weibull_quantile(0.5, 0.0).is_err());
    }

    #[test]
    fn weibull_roundtrip_through_cdf() {
        for k in [0.5, 2.0, 3.0, 4.0] {
            for i in 0..100 {
                let u = i as f64 / 100.0;
                let x = weibull_quantile(u, k).unwrap();
                let back = 1.0 - (-x.powf(k)).exp();
                assert!((back - u).abs() < 1e-15, "k = {k}, u = {u}");
            }
        }
    }

    #[test]
    fn weibull_tails_agree_and_reach_far_tail() {
        let a = weibull_quantile_tails(0.7, 0.3, 2.0).unwrap();
        assert!((a - weibull_quantile(0.7, 2.0).unwrap()).abs() < 1e-15);
        let far = weibull_quantile_tails(1.0, 1e-20, 1.0).unwrap();
        assert!((far - 20.0 * std::f64::consts::LN_10).abs() < 1e-12);
    }

    #[test]
    fn weibull_mean_closed_form() {
        assert!((weibull_mean(2.0) - 0.886226925452758).abs() < 1e-14);
        assert!((weibull_mean(3.0) - 0.8929795115692493).abs() < 1e-14);
        assert!((weibull_mean(4.0) - 0.906402477055477).abs() < 1e-14);
    }

    #[test]
    fn gamma_exponential_special_case() {
        let u = 1.0 - (-1.0f64).exp();
        assert!((gamma_quantile(u, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((gamma_quantile(0.5, 1.0).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn gamma_quantile_reference_values() {
        // 40-digit reference inversions
        let cases = [
            (3.0, 0.001, 0.1905333775684032),
            (3.0, 0.1, 1.1020653282493211),
            (3.0, 0.5, 2.6740603137235603),
            (3.0, 0.9, 5.32232033783421),
            (3.0, 0.999, 11.228872242412663),
            (5.0, 0.001, 0.7393717319178326),
            (5.0, 0.1, 2.4325910259626644),
            (5.0, 0.5, 4.670908882795984),
            (5.0, 0.9, 7.9935895860526305),
            (5.0, 0.999, 14.794149222537209),
        ];
        for (k, u, expected) in cases {
            let x = gamma_quantile(u, k).unwrap();
            assert!((x - expected).abs() <= 1e-9 * expected, "k = {k}, u = {u}: {x}");
        }
    }

    #[test]
    fn gamma_pq_matches_independent_implementation() {
        use statrs::function::gamma::{gamma_lr, gamma_ur};
        for &k in &[0.3, 1.0, 2.5, 3.0, 5.0, 40.0] {
            for i in 1..200 {
                let x = i as f64 * 0.25;
                let (p, q) = regularized_gamma_pq(k, x).unwrap();
                assert!((p - gamma_lr(k, x)).abs() < 1e-13, "P({k}, {x})");
                assert!((q - gamma_ur(k, x)).abs() < 1e-13, "Q({k}, {x})");
            }
        }
    }

    #[test]
    fn gamma_quantile_small_shape_and_extreme_tails() {
        use statrs::function::gamma::{gamma_lr, gamma_ur};
        for &k in &[0.2, 0.7, 1.5, 3.0, 5.0, 25.0] {
            for &u in &[1e-12, 1e-6, 0.01, 0.5, 0.99] {
                let x = gamma_quantile(u, k).unwrap();
                assert!((gamma_lr(k, x) - u).abs() <= 1e-10, "k = {k}, u = {u}");
            }
            let x = gamma_quantile_tails(1.0, 1e-14, k).unwrap();
            let q = gamma_ur(k, x);
            assert!((q - 1e-14).abs() <= 1e-12 * 1e-14, "k = {k}: Q = {q}");
        }
    }

    #[test]
    fn gamma_quantile_strictly_increasing() {
        for k in [1.0, 3.0, 5.0] {
            let mut prev = -1.0;
            for i in 0..1000 {
                let u = i as f64 / 1000.0;
                let x = gamma_quantile(u, k).unwrap();
                assert!(x > prev, "k = {k}, u = {u}");
                prev = x;
            }
        }
    }

    #[test]
    fn gamma_quantile_rejects_bad_input() {
        assert!(gamma_quantile(1.0, 3.0).is_err());
        assert!(gamma_quantile(-1e-3, 3.0).is_err());
        assert!(gamma_quantile(0.5, -1.0).is_err());
        assert!(gamma_quantile_tails(0.3, 0.3, 2.0).is_err());
    }
}
