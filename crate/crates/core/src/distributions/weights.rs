//! Multiplier-bootstrap weight distributions. Every family has mean 0 and variance 1.

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Upper end `1/2 - 1/(2 sqrt 5)` of the admissible `gamma` range for
/// [`WeightFamily::ThirdOrder`].
pub const THIRD_ORDER_GAMMA_MAX: f64 = 0.276_393_202_250_021;

/// Distribution of the multipliers `e_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightFamily {
    /// `N(0, 1)`.
    Gaussian,
    /// Uniform on `{-1, +1}`.
    Rademacher,
    /// `N(0, sigma^2)` plus an independent two-point law on `{a, b}` chosen so
    /// that `E[e^3] = 1`.
    ThirdOrder { gamma: f64 },
    /// `zeta + sqrt(1 - v) ((alpha + beta) eta - alpha) sqrt((alpha + beta + 1) / (alpha beta))`
    /// with `zeta ~ N(0, v)` and `eta ~ Beta(alpha, beta)`. Experimental: this
    /// family comes from a comparison bound rather than a recommended scheme.
    Beta { alpha: f64, beta: f64, v: f64 },
}

impl WeightFamily {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightFamily::Gaussian | WeightFamily::Rademacher => Ok(()),
            WeightFamily::ThirdOrder { gamma } => third_order_params(gamma).map(|_| ()),
            WeightFamily::Beta { alpha, beta, v } => {
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(Error::invalid("beta alpha", alpha, "must be positive"));
                }
                if !(beta > 0.0 && beta.is_finite()) {
                    return Err(Error::invalid("beta beta", beta, "must be positive"));
                }
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::invalid("beta v", v, "must lie in [0, 1]"));
                }
                Ok(())
            }
        }
    }

    /// Short label used in reports, e.g. `third_order(0.2)`.
    pub fn label(&self) -> String {
        match *self {
            WeightFamily::Gaussian => "gaussian".into(),
            WeightFamily::Rademacher => "rademacher".into(),
            WeightFamily::ThirdOrder { gamma } => format!("third_order({gamma})"),
            WeightFamily::Beta { alpha, beta, v } => format!("beta({alpha},{beta},{v})"),
        }
    }
}

/// Parameters of the third-order matching law `e = e1 + e2`, with
/// `e1 ~ N(0, sigma^2)` and `e2 = a` w.p. `gamma`, `b` otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThirdOrderParams {
    pub gamma: f64,
    pub sigma: f64,
    pub a: f64,
    pub b: f64,
}

impl ThirdOrderParams {
    /// Exact `(E[e], E[e^2], E[e^3])` from the parameters.
    pub fn moments(&self) -> (f64, f64, f64) {
        let (g, a, b, s2) = (self.gamma, self.a, self.b, self.sigma * self.sigma);
        let m1 = g * a + (1.0 - g) * b;
        let m2 = s2 + g * a * a + (1.0 - g) * b * b;
        // E[(e1 + e2)^3] = E[e2^3] + 3 sigma^2 E[e2]
        let m3 = g * a.powi(3) + (1.0 - g) * b.powi(3) + 3.0 * s2 * m1;
        (m1, m2, m3)
    }
}

pub fn third_order_params(gamma: f64) -> Result<ThirdOrderParams> {
    if !(gamma > 0.0 && gamma < THIRD_ORDER_GAMMA_MAX) {
        return Err(Error::invalid(
            "third-order gamma",
            gamma,
            format!("must lie in (0, 1/2 - 1/(2 sqrt 5)) = (0, {THIRD_ORDER_GAMMA_MAX:.6})"),
        ));
    }
    let g = gamma;
    let one_minus = 1.0 - g;
    let one_minus_two = 1.0 - 2.0 * g;
    let sigma2 = 1.0 - (one_minus * g).cbrt() / one_minus_two.cbrt().powi(2);
    let a = one_minus.cbrt().powi(2) / (g.cbrt() * one_minus_two.cbrt());
    let b = -g.cbrt().powi(2) / (one_minus.cbrt() * one_minus_two.cbrt());
    Ok(ThirdOrderParams {
        gamma,
        sigma: sigma2.sqrt(),
        a,
        b,
    })
}

/// A validated family with its derived constants, ready to draw from.
#[derive(Debug, Clone)]
pub enum WeightSampler {
    Gaussian,
    Rademacher,
    ThirdOrder(ThirdOrderParams),
    Beta {
        eta: Beta<f64>,
        zeta_sd: f64,
        /// `sqrt(1 - v) sqrt((alpha + beta + 1) / (alpha beta))`
        scale: f64,
        alpha: f64,
        total: f64,
    },
}

impl WeightSampler {
    pub fn new(family: &WeightFamily) -> Result<Self> {
        family.validate()?;
        Ok(match *family {
            WeightFamily::Gaussian => WeightSampler::Gaussian,
            WeightFamily::Rademacher => WeightSampler::Rademacher,
            WeightFamily::ThirdOrder { gamma } => WeightSampler::ThirdOrder(third_order_params(gamma)?),
            WeightFamily::Beta { alpha, beta, v } => WeightSampler::Beta {
                eta: Beta::new(alpha, beta)
                    .map_err(|e| Error::invalid("beta alpha", alpha, e.to_string()))?,
                zeta_sd: v.sqrt(),
                scale: (1.0 - v).sqrt() * ((alpha + beta + 1.0) / (alpha * beta)).sqrt(),
                alpha,
                total: alpha + beta,
            },
        })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            WeightSampler::Gaussian => StandardNormal.sample(rng),
            WeightSampler::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            WeightSampler::ThirdOrder(params) => {
                let z: f64 = StandardNormal.sample(rng);
                let point = if rng.random::<f64>() < params.gamma {
                    params.a
                } else {
                    params.b
                };
                params.sigma * z + point
            }
            WeightSampler::Beta {
                eta,
                zeta_sd,
                scale,
                alpha,
                total,
            } => {
                let zeta = if *zeta_sd > 0.0 {
                    zeta_sd * Distribution::<f64>::sample(&StandardNormal, rng)
                } else {
                    0.0
                };
                if *scale > 0.0 {
                    zeta + scale * (total * eta.sample(rng) - alpha)
                } else {
                    zeta
                }
            }
        }
    }

    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        out.iter_mut().for_each(|e| *e = self.sample(rng));
    }
}

/// One draw of a multiplier weight from `family`.
pub fn sample_weight<R: Rng + ?Sized>(family: &WeightFamily, rng: &mut R) -> Result<f64> {
    Ok(WeightSampler::new(family)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{std_normal_cdf, RngStream};

    fn draws(family: WeightFamily, count: usize, seed: u64) -> Vec<f64> {
        let sampler = WeightSampler::new(&family).unwrap();
        let mut rng = RngStream::new(seed, 0).rng();
        (0..count).map(|_| sampler.sample(&mut rng)).collect()
    }

    fn raw_moment(xs: &[f64], k: i32) -> f64 {
        xs.iter().map(|x| x.powi(k)).sum::<f64>() / xs.len() as f64
    }

    #[test]
    fn third_order_closed_forms() {
        // 40-digit evaluation of the closed forms
        let p = third_order_params(0.2).unwrap();
        assert!((p.sigma * p.sigma - 0.23685717163111208).abs() < 1e-12);
        assert!((p.a - 1.7471609294725978).abs() < 1e-12);
        assert!((p.b - -0.43679023236814946).abs() < 1e-12);
        assert!((0.2 * p.a + 0.8 * p.b).abs() < 1e-10);
        assert!((0.2 * p.a.powi(3) + 0.8 * p.b.powi(3) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn third_order_rejects_out_of_range() {
        let err = third_order_params(0.3).unwrap_err();
        assert!(err.to_string().contains("0.276393"), "{err}");
        assert!(third_order_params(0.0).is_err());
        assert!(third_order_params(THIRD_ORDER_GAMMA_MAX).is_err());
    }

    #[test]
    fn third_order_identities_over_grid() {
        for i in 1..=27 {
            let g = i as f64 * 0.01;
            let p = third_order_params(g).unwrap();
            let s2 = p.sigma * p.sigma;
            assert!(s2 > 0.0);
            assert!((g * p.a + (1.0 - g) * p.b).abs() < 1e-12, "gamma = {g}");
            assert!((g * p.a * p.a + (1.0 - g) * p.b * p.b - (1.0 - s2)).abs() < 1e-12);
            assert!((g * p.a.powi(3) + (1.0 - g) * p.b.powi(3) - 1.0).abs() < 1e-12);
            let (m1, m2, m3) = p.moments();
            assert!(m1.abs() < 1e-12 && (m2 - 1.0).abs() < 1e-12 && (m3 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rademacher_support_and_mean() {
        let xs = draws(WeightFamily::Rademacher, 100_000, 1);
        assert!(xs.iter().all(|&x| x == 1.0 || x == -1.0));
        assert!(raw_moment(&xs, 1).abs() < 0.02);
    }

    #[test]
    fn third_order_monte_carlo_moments() {
        let xs = draws(WeightFamily::ThirdOrder { gamma: 0.2 }, 1_000_000, 2);
        assert!(raw_moment(&xs, 1).abs() < 0.01);
        assert!((raw_moment(&xs, 2) - 1.0).abs() < 0.01);
        assert!((raw_moment(&xs, 3) - 1.0).abs() < 0.05);
    }

    #[test]
    fn beta_family_matches_third_moment() {
        let family = WeightFamily::Beta {
            alpha: 0.5,
            beta: 1.5,
            v: 0.0,
        };
        let xs = draws(family, 1_000_000, 3);
        assert!(raw_moment(&xs, 1).abs() < 0.01);
        assert!((raw_moment(&xs, 2) - 1.0).abs() < 0.01);
        assert!((raw_moment(&xs, 3) - 1.0).abs() < 0.05);
    }

    #[test]
    fn beta_family_with_v_one_is_standard_normal() {
        let family = WeightFamily::Beta {
            alpha: 2.0,
            beta: 5.0,
            v: 1.0,
        };
        let mut xs = draws(family, 100_000, 4);
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = std_normal_cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        // asymptotic 1% critical value of the one-sample KS statistic
        assert!(ks < 1.6276 / n.sqrt(), "ks = {ks}");
    }

    #[test]
    fn sub_gaussian_condition() {
        let psi = |family| {
            let xs = draws(family, 1_000_000, 5);
            xs.iter().map(|e| (e * e / 4.0).exp()).sum::<f64>() / xs.len() as f64
        };
        let rad = psi(WeightFamily::Rademacher);
        assert!((rad - 0.25f64.exp()).abs() < 1e-9);
        let gauss = psi(WeightFamily::Gaussian);
        assert!((gauss - std::f64::consts::SQRT_2).abs() < 0.02, "{gauss}");
        let third = psi(WeightFamily::ThirdOrder { gamma: 0.2 });
        assert!(third <= 2.0 && (third - 1.4056476134273175).abs() < 0.02, "{third}");
    }

    #[test]
    fn invalid_beta_parameters() {
        assert!(WeightFamily::Beta { alpha: 0.0, beta: 1.0, v: 0.5 }.validate().is_err());
        assert!(WeightFamily::Beta { alpha: 1.0, beta: -1.0, v: 0.5 }.validate().is_err());
        assert!(WeightFamily::Beta { alpha: 1.0, beta: 1.0, v: 1.5 }.validate().is_err());
        let mut rng = RngStream::new(0, 0).rng();
        assert!(sample_weight(&WeightFamily::ThirdOrder { gamma: 0.4 }, &mut rng).is_err());
    }

    #[test]
    fn reproducible_bit_exact() {
        for family in [
            WeightFamily::Gaussian,
            WeightFamily::Rademacher,
            WeightFamily::ThirdOrder { gamma: 0.2 },
            WeightFamily::Beta { alpha: 0.5, beta: 1.5, v: 0.3 },
        ] {
            let a = draws(family, 1000, 77);
            let b = draws(family, 1000, 77);
            assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn family_json_shape() {
        let f: WeightFamily = serde_json::from_str(r#"{"family":"third_order","gamma":0.2}"#).unwrap();
        assert_eq!(f, WeightFamily::ThirdOrder { gamma: 0.2 });
        let f: WeightFamily = serde_json::from_str(r#"{"family":"rademacher"}"#).unwrap();
        assert_eq!(f, WeightFamily::Rademacher);
        assert!(serde_json::from_str::<WeightFamily>(r#"{"family":"mammen"}"#).is_err());
    }
}
