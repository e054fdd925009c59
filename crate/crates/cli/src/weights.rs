use serde::Serialize;

use hdboot::distributions::{RngStream, WeightSampler};
use hdboot::format::real17;

use crate::args::{resolve_seed, weight_family, WeightsArgs};
use crate::error::CliError;
use crate::output::{num, to_json_text, Real};

#[derive(Serialize)]
struct Summary {
    family: String,
    count: usize,
    seed: u64,
    /// Raw sample moments E[e^k], k = 1..4
    moments: [Real; 4],
    /// Sample mean of exp(e^2 / 4)
    exp_sq_over_4: Real,
}

pub fn run(args: WeightsArgs) -> Result<(), CliError> {
    if args.count == 0 {
        return Err(CliError::Usage("--count must be positive".into()));
    }
    let family = weight_family(args.family.into(), &args.weights)?.expect("weight families are multipliers");
    let sampler = WeightSampler::new(&family)?;
    let seed = resolve_seed(args.seed);
    let mut draws = vec![0.0; args.count];
    sampler.fill(&mut RngStream::new(seed, 0).rng(), &mut draws);

    let n = draws.len() as f64;
    let moment = |k: i32| draws.iter().map(|e| e.powi(k)).sum::<f64>() / n;
    let summary = Summary {
        family: family.label(),
        count: draws.len(),
        seed,
        moments: [num(moment(1)), num(moment(2)), num(moment(3)), num(moment(4))],
        exp_sq_over_4: num(draws.iter().map(|e| (e * e / 4.0).exp()).sum::<f64>() / n),
    };

    let mut csv = String::with_capacity(draws.len() * 20 + 8);
    csv.push_str("draw\n");
    for e in &draws {
        csv.push_str(&real17(*e));
        csv.push('\n');
    }
    let summary = to_json_text(&summary);
    crate::output::emit(args.output.as_deref(), csv.as_bytes())?;
    match args.summary.as_deref() {
        Some(path) => std::fs::write(path, summary).map_err(|e| CliError::io(path, e)),
        None => {
            eprint!("{summary}");
            Ok(())
        }
    }
}
