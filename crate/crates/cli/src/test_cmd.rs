use serde::Serialize;
use serde_json::Value;

use hdboot::bootstrap::{decide, exact_critical_value, Bootstrapper};
use hdboot::distributions::RngStream;
use hdboot::stats::{max_abs_statistic, max_statistic, MeanVector, ShiftVector};

use crate::args::{build_scheme, resolve_seed, BootCount, TestArgs};
use crate::error::CliError;
use crate::input::{check_dim, parse_inline, read_matrix, read_vector};
use crate::output::{emit, num, to_json_text, Real};

#[derive(Serialize)]
struct TestReport {
    #[serde(rename = "T_n")]
    t_n: Real,
    critical_value: Real,
    alpha: Real,
    scheme: String,
    #[serde(rename = "B")]
    num_boot: Value,
    eta: Real,
    reject: bool,
    seed: Option<u64>,
    n: usize,
    p: usize,
    /// `known_mean` or `self_centered`
    centering: &'static str,
}

fn optional_vector(
    flag: &str,
    inline: Option<&str>,
    file: Option<&std::path::Path>,
    p: usize,
) -> Result<Option<Vec<f64>>, CliError> {
    let values = match (inline, file) {
        (Some(text), _) => parse_inline(flag, text, p)?,
        (None, Some(path)) => read_vector(path)?,
        (None, None) => return Ok(None),
    };
    check_dim(&format!("--{flag}"), values.len(), p)?;
    Ok(Some(values))
}

pub fn run(args: TestArgs) -> Result<(), CliError> {
    let x = read_matrix(&args.data)?;
    let p = x.p();
    let mu = optional_vector("mu", args.mu.as_deref(), args.mu_file.as_deref(), p)?;
    let t = optional_vector("t", args.t.as_deref(), args.t_file.as_deref(), p)?;
    if !(args.eta >= 0.0 && args.eta.is_finite()) {
        return Err(CliError::Usage(format!("--eta must be a finite non-negative number, got {}", args.eta)));
    }
    let scheme = build_scheme(
        args.bootstrap,
        &args.weights,
        match args.num_boot {
            BootCount::Draws(b) => b,
            BootCount::Exact => 1,
        },
        args.abs,
        args.uncentered,
    )?;

    let centering = if mu.is_some() { "known_mean" } else { "self_centered" };
    let mu = MeanVector::new(mu.unwrap_or_else(|| x.column_means()))?;
    let t = match t {
        Some(values) => ShiftVector::new(values)?,
        None => ShiftVector::zeros(p),
    };
    let statistic = if args.abs {
        max_abs_statistic(&x, &mu, &t)?
    } else {
        max_statistic(&x, &mu, &t)?
    };

    let (critical_value, seed, num_boot) = match args.num_boot {
        BootCount::Exact => {
            let cv = exact_critical_value(&x, &t, args.alpha, &scheme.kind, args.abs)?;
            (cv.critical_value, None, Value::String("exact".into()))
        }
        BootCount::Draws(b) => {
            let seed = resolve_seed(args.seed);
            let cv = Bootstrapper::new(&x, &t, &scheme)?.critical_value(
                args.alpha,
                RngStream::new(seed, 0),
                0,
            )?;
            (cv.critical_value, Some(seed), Value::from(b))
        }
    };
    let decision = decide(statistic, critical_value, args.eta)?;
    let report = TestReport {
        t_n: num(statistic),
        critical_value: num(critical_value),
        alpha: num(args.alpha),
        scheme: scheme.label(),
        num_boot,
        eta: num(args.eta),
        reject: decision.reject,
        seed,
        n: x.n(),
        p,
        centering,
    };
    emit(args.output.as_deref(), to_json_text(&report).as_bytes())
}
