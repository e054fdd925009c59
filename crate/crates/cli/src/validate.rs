//! `validate`: invariant suites for the weight families, special functions
//! and interpolation/tail constructions.

use serde::Serialize;

use hdboot::distributions::{
    gen_ar1_gaussian_rows, gamma_quantile, regularized_gamma_p, std_normal_cdf, third_order_params, RngStream,
    WeightFamily, WeightSampler,
};
use hdboot::lindeberg::{
    enumerate_epsilon_law, exact_w_law, exchangeable_tail_check, lindeberg_epsilon_law, tail_grid,
};

use crate::args::{resolve_seed, weight_family, CheckName, FamilyName, ValidateArgs, WeightParams};
use crate::error::CliError;
use crate::output::{emit, num, to_json_text, Real};

#[derive(Debug, Serialize)]
pub struct CheckResult {
    check: &'static str,
    item: String,
    /// `within`: |observed - target| <= tolerance; `at_most`: observed <= target + tolerance
    relation: &'static str,
    target: Real,
    observed: Real,
    tolerance: Real,
    pass: bool,
}

#[derive(Serialize)]
struct Report {
    seed: u64,
    pass: bool,
    checks: Vec<CheckResult>,
}

struct Suite {
    name: &'static str,
    results: Vec<CheckResult>,
}

impl Suite {
    fn within(&mut self, item: impl Into<String>, target: f64, observed: f64, tolerance: f64) {
        self.results.push(CheckResult {
            check: self.name,
            item: item.into(),
            relation: "within",
            target: num(target),
            observed: num(observed),
            tolerance: num(tolerance),
            pass: (observed - target).abs() <= tolerance,
        });
    }

    fn at_most(&mut self, item: impl Into<String>, bound: f64, observed: f64, tolerance: f64) {
        self.results.push(CheckResult {
            check: self.name,
            item: item.into(),
            relation: "at_most",
            target: num(bound),
            observed: num(observed),
            tolerance: num(tolerance),
            pass: observed <= bound + tolerance,
        });
    }
}

fn check_name(c: CheckName) -> &'static str {
    match c {
        CheckName::EpsilonLaw => "epsilon-law",
        CheckName::EpsilonExact => "epsilon-exact",
        CheckName::WInvariance => "w-invariance",
        CheckName::TailBound => "tail-bound",
        CheckName::ThirdOrderIdentities => "third-order-identities",
        CheckName::WeightMoments => "weight-moments",
        CheckName::GammaRoundtrip => "gamma-roundtrip",
        CheckName::NormalCdf => "normal-cdf",
        CheckName::Ar1 => "ar1",
    }
}

const ALL_CHECKS: [CheckName; 9] = [
    CheckName::EpsilonLaw,
    CheckName::EpsilonExact,
    CheckName::WInvariance,
    CheckName::TailBound,
    CheckName::ThirdOrderIdentities,
    CheckName::WeightMoments,
    CheckName::GammaRoundtrip,
    CheckName::NormalCdf,
    CheckName::Ar1,
];

pub fn run(args: ValidateArgs) -> Result<(), CliError> {
    if args.n == 0 || args.reps == 0 || args.count < 2 {
        return Err(CliError::Usage("--n and --reps must be positive and --count at least 2".into()));
    }
    let families = match args.family {
        Some(f) => vec![f],
        None => vec![FamilyName::Gaussian, FamilyName::Rademacher, FamilyName::Mammen3, FamilyName::Beta],
    };
    for &f in &families {
        weight_family(f.into(), &args.weights)?;
    }
    let seed = resolve_seed(args.seed);
    let mut selected = if args.only.is_empty() {
        ALL_CHECKS.to_vec()
    } else {
        args.only.clone()
    };
    selected.sort();
    selected.dedup();

    let mut checks = Vec::new();
    for check in selected {
        let mut suite = Suite {
            name: check_name(check),
            results: Vec::new(),
        };
        // each check draws from its own stream
        let stream = RngStream::new(seed, check as u64);
        match check {
            CheckName::EpsilonLaw => epsilon_law(&mut suite, args.n, args.reps, stream)?,
            CheckName::EpsilonExact => epsilon_exact(&mut suite)?,
            CheckName::WInvariance => w_invariance(&mut suite)?,
            CheckName::TailBound => tail_bound(&mut suite, args.reps, stream)?,
            CheckName::ThirdOrderIdentities => third_order_identities(&mut suite)?,
            CheckName::WeightMoments => weight_moments(&mut suite, &families, &args.weights, args.count, stream)?,
            CheckName::GammaRoundtrip => gamma_roundtrip(&mut suite)?,
            CheckName::NormalCdf => normal_cdf(&mut suite),
            CheckName::Ar1 => ar1(&mut suite, stream)?,
        }
        checks.extend(suite.results);
    }
    let pass = checks.iter().all(|c| c.pass);
    let report = Report { seed, pass, checks };
    emit(args.output.as_deref(), to_json_text(&report).as_bytes())?;
    if pass {
        Ok(())
    } else {
        Err(CliError::ChecksFailed)
    }
}

fn epsilon_law(suite: &mut Suite, n: usize, reps: u64, stream: RngStream) -> Result<(), CliError> {
    let hist = lindeberg_epsilon_law(n, reps, stream)?;
    for (s, freq) in hist.frequencies().into_iter().enumerate() {
        suite.within(format!("n={n} P(sum eps={s})"), hist.exact, freq, 0.01);
    }
    Ok(())
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

fn epsilon_exact(suite: &mut Suite) -> Result<(), CliError> {
    for n in 1..=6 {
        let law = enumerate_epsilon_law(n, 1)?;
        let worst_sum = law
            .sum_counts()
            .iter()
            .map(|&c| c.abs_diff(factorial(n)) as f64)
            .fold(0.0, f64::max);
        suite.within(format!("n={n} cells per sum (target n!)"), 0.0, worst_sum, 0.0);
        let worst_pattern = law
            .counts
            .iter()
            .enumerate()
            .map(|(mask, &c)| {
                let s = (mask as u32).count_ones() as usize;
                c.abs_diff(factorial(s) * factorial(n - s)) as f64
            })
            .fold(0.0, f64::max);
        suite.within(format!("n={n} cells per pattern (target s!(n-s)!)"), 0.0, worst_pattern, 0.0);
    }
    Ok(())
}

fn w_invariance(suite: &mut Suite) -> Result<(), CliError> {
    let xs = [0.3, 1.1, 2.9];
    let ys = [-0.7, 0.5, 4.2];
    for n in 1..=3 {
        let base = exact_w_law(&xs[..n], &ys[..n], 1)?;
        for k in 2..=n {
            let other = exact_w_law(&xs[..n], &ys[..n], k)?;
            let diff = if other.len() == base.len() {
                base.iter()
                    .zip(&other)
                    .map(|(a, b)| (a.0 - b.0).abs().max((a.1 - b.1).abs()))
                    .fold(0.0, f64::max)
            } else {
                f64::INFINITY
            };
            suite.within(format!("n={n} law(W_{k}) vs law(W_1)"), 0.0, diff, 1e-12);
        }
    }
    Ok(())
}

fn tail_bound(suite: &mut Suite, reps: u64, stream: RngStream) -> Result<(), CliError> {
    for (i, case) in tail_grid().iter().enumerate() {
        let report = exchangeable_tail_check(&case.weights, &case.pool, case.t, reps, stream.child(i as u64))?;
        let n = case.weights.len();
        suite.at_most(
            format!("{} n={n} t={:.4}", case.shape, case.t),
            report.bound,
            report.empirical_tail,
            3.0 * report.bound_std_error(),
        );
    }
    Ok(())
}

fn third_order_identities(suite: &mut Suite) -> Result<(), CliError> {
    for gamma in [0.05, 0.1, 0.2, 0.27] {
        let (m1, m2, m3) = third_order_params(gamma)?.moments();
        suite.within(format!("gamma={gamma} E[e]"), 0.0, m1, 1e-12);
        suite.within(format!("gamma={gamma} E[e^2]"), 1.0, m2, 1e-12);
        suite.within(format!("gamma={gamma} E[e^3]"), 1.0, m3, 1e-12);
    }
    Ok(())
}

/// `E[e^3]` of a weight family.
fn exact_third_moment(family: &WeightFamily) -> f64 {
    match *family {
        WeightFamily::Gaussian | WeightFamily::Rademacher => 0.0,
        WeightFamily::ThirdOrder { .. } => 1.0,
        WeightFamily::Beta { alpha, beta, v } => {
            let skew = 2.0 * (beta - alpha) * (alpha + beta + 1.0).sqrt() / ((alpha + beta + 2.0) * (alpha * beta).sqrt());
            (1.0 - v).powf(1.5) * skew
        }
    }
}

/// Sample mean of `f(e)` and its standard error.
fn mean_and_se(draws: &[f64], f: impl Fn(f64) -> f64) -> (f64, f64) {
    let n = draws.len() as f64;
    let vals: Vec<f64> = draws.iter().map(|&e| f(e)).collect();
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn weight_moments(
    suite: &mut Suite,
    families: &[FamilyName],
    params: &WeightParams,
    count: usize,
    stream: RngStream,
) -> Result<(), CliError> {
    for (i, &name) in families.iter().enumerate() {
        let family = weight_family(name.into(), params)?.expect("weight families are multipliers");
        let sampler = WeightSampler::new(&family)?;
        let mut rng = stream.child(i as u64).rng();
        let mut draws = vec![0.0; count];
        sampler.fill(&mut rng, &mut draws);
        let label = family.label();
        let floor = 1e-12;
        let (m1, se1) = mean_and_se(&draws, |e| e);
        suite.within(format!("{label} E[e]"), 0.0, m1, (5.0 * se1).max(floor));
        let (m2, se2) = mean_and_se(&draws, |e| e * e);
        suite.within(format!("{label} E[e^2]"), 1.0, m2, (5.0 * se2).max(floor));
        let (m3, se3) = mean_and_se(&draws, |e| e.powi(3));
        suite.within(format!("{label} E[e^3]"), exact_third_moment(&family), m3, (5.0 * se3).max(floor));
        if !matches!(family, WeightFamily::Beta { .. }) {
            let (psi, se) = mean_and_se(&draws, |e| (e * e / 4.0).exp());
            suite.at_most(format!("{label} E[exp(e^2/4)]"), 2.0, psi, 3.0 * se);
        }
    }
    Ok(())
}

fn gamma_roundtrip(suite: &mut Suite) -> Result<(), CliError> {
    for k in [1.0, 3.0, 5.0] {
        let mut worst: f64 = 0.0;
        for i in 0..1000 {
            let u = (i as f64 + 0.5) / 1000.0;
            let x = gamma_quantile(u, k)?;
            worst = worst.max((regularized_gamma_p(k, x)? - u).abs());
        }
        suite.within(format!("k={k} max |P(k, F^-1(u)) - u| over 1000 u"), 0.0, worst, 1e-8);
    }
    Ok(())
}

fn normal_cdf(suite: &mut Suite) {
    // 40-digit reference values
    let reference = [
        (-8.0, 6.220960574271784e-16),
        (-1.0, 0.15865525393145705),
        (0.0, 0.5),
        (1.0, 0.8413447460685429),
        (1.96, 0.9750021048517795),
        (8.0, 0.9999999999999993),
    ];
    for (x, phi) in reference {
        suite.within(format!("Phi({x})"), phi, std_normal_cdf(x), 1e-12);
    }
    let worst = (-80..=80)
        .map(|i| {
            let x = i as f64 * 0.1;
            (std_normal_cdf(-x) - (1.0 - std_normal_cdf(x))).abs()
        })
        .fold(0.0, f64::max);
    suite.within("max |Phi(-x) - (1 - Phi(x))| on [-8, 8]", 0.0, worst, 1e-14);
}

fn ar1(suite: &mut Suite, stream: RngStream) -> Result<(), CliError> {
    let (n, p) = (100_000, 4);
    for (i, rho) in [0.0, 0.25, 0.5, 0.75].into_iter().enumerate() {
        let y = gen_ar1_gaussian_rows(n, p, rho, &mut stream.child(i as u64).rng())?;
        let cov = hdboot::stats::covariance_estimate(&y);
        for lag in 1..p {
            let corr = cov.get(0, lag) / (cov.get(0, 0) * cov.get(lag, lag)).sqrt();
            suite.within(format!("rho={rho} corr(Y_1, Y_{})", lag + 1), rho.powi(lag as i32), corr, 0.02);
        }
    }
    Ok(())
}
