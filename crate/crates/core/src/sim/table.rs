//! Batch driver and CSV sink for rejection-probability tables.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{
    estimate_rejection_batch, DesignSpec, Marginal, RejectionEstimate, REF_ALPHA, REF_DIMS, REF_GAMMA_SHAPES,
    REF_NUM_BOOT, REF_NUM_REPS, REF_N_ASYMMETRIC, REF_N_SYMMETRIC, REF_RHOS, REF_THIRD_ORDER_GAMMA,
    REF_WEIBULL_SHAPES,
};
use crate::bootstrap::BootstrapScheme;
use crate::distributions::WeightFamily;
use crate::format::real17;
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 16] = [
    "symmetric",
    "n",
    "p",
    "rho",
    "marginal",
    "k",
    "alpha",
    "scheme",
    "num_boot",
    "num_reps",
    "base_seed",
    "rejections",
    "rejection_rate",
    "mc_std_error",
    "scale",
    "deviations",
];

/// Number of leading columns identifying a design.
const KEY_COLUMNS: usize = 11;

pub const DESK_DIMS: [usize; 2] = [100, 200];
pub const DESK_NUM_BOOT: usize = 300;
pub const DESK_NUM_REPS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceTable {
    /// Weibull marginals, `k` in {2, 3, 4}.
    Weibull,
    /// Gamma marginals, `k` in {1, 3, 5}.
    Gamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridScale {
    /// `p` in {400, 800}, `B = 500`, `R = 20000`.
    Full,
    /// `p` in {100, 200}, `B = 300`, `R = 2000`.
    Desk,
}

/// The four schemes of the reference tables, in column order GB, EB, RB, MB.
pub fn reference_schemes(num_boot: usize) -> [BootstrapScheme; 4] {
    [
        BootstrapScheme::multiplier(WeightFamily::Gaussian, num_boot),
        BootstrapScheme::empirical(num_boot),
        BootstrapScheme::multiplier(WeightFamily::Rademacher, num_boot),
        BootstrapScheme::multiplier(
            WeightFamily::ThirdOrder {
                gamma: REF_THIRD_ORDER_GAMMA,
            },
            num_boot,
        ),
    ]
}

/// Sizes that vary between grid scales.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSettings {
    pub dims: Vec<usize>,
    pub num_boot: usize,
    pub num_reps: usize,
}

impl GridScale {
    pub fn settings(self) -> GridSettings {
        match self {
            GridScale::Full => GridSettings {
                dims: REF_DIMS.to_vec(),
                num_boot: REF_NUM_BOOT,
                num_reps: REF_NUM_REPS,
            },
            GridScale::Desk => GridSettings {
                dims: DESK_DIMS.to_vec(),
                num_boot: DESK_NUM_BOOT,
                num_reps: DESK_NUM_REPS,
            },
        }
    }
}

/// One design block of a reference table (12 `(k, rho)` rows, two `p`
/// columns, four schemes: 96 designs), ordered row by row.
pub fn reference_grid(table: ReferenceTable, symmetric: bool, scale: GridScale, base_seed: u64) -> Vec<DesignSpec> {
    reference_grid_with(table, symmetric, &scale.settings(), base_seed)
}

/// [`reference_grid`] with custom dimensions, `B` and `R`.
pub fn reference_grid_with(
    table: ReferenceTable,
    symmetric: bool,
    settings: &GridSettings,
    base_seed: u64,
) -> Vec<DesignSpec> {
    let marginals: Vec<Marginal> = match table {
        ReferenceTable::Weibull => REF_WEIBULL_SHAPES.iter().map(|&k| Marginal::Weibull { k }).collect(),
        ReferenceTable::Gamma => REF_GAMMA_SHAPES.iter().map(|&k| Marginal::Gamma { k }).collect(),
    };
    let n = if symmetric {
        REF_N_SYMMETRIC
    } else {
        REF_N_ASYMMETRIC
    };
    let mut out = Vec::with_capacity(marginals.len() * REF_RHOS.len() * settings.dims.len() * 4);
    for marginal in marginals {
        for rho in REF_RHOS {
            for &p in &settings.dims {
                for scheme in reference_schemes(settings.num_boot) {
                    out.push(DesignSpec {
                        symmetric,
                        n,
                        p,
                        rho,
                        marginal,
                        alpha: REF_ALPHA,
                        scheme,
                        num_reps: settings.num_reps,
                        base_seed,
                    });
                }
            }
        }
    }
    out
}

// Reference rejection rates, indexed [design][k][rho][p][scheme] with
// design (asymmetric, symmetric), p (400, 800) and scheme (GB, EB, RB, MB).
#[rustfmt::skip]
const WEIBULL_RATES: [[[[[f64; 4]; 2]; 4]; 3]; 2] = [
    [
        [[[0.117, 0.098, 0.125, 0.099], [0.125, 0.102, 0.133, 0.102]],
         [[0.121, 0.100, 0.126, 0.099], [0.121, 0.097, 0.129, 0.097]],
         [[0.114, 0.095, 0.122, 0.096], [0.124, 0.100, 0.133, 0.102]],
         [[0.117, 0.098, 0.122, 0.099], [0.121, 0.099, 0.128, 0.099]]],
        [[[0.110, 0.105, 0.115, 0.105], [0.106, 0.100, 0.114, 0.101]],
         [[0.105, 0.101, 0.110, 0.100], [0.107, 0.102, 0.114, 0.099]],
         [[0.103, 0.098, 0.108, 0.098], [0.107, 0.101, 0.113, 0.100]],
         [[0.106, 0.103, 0.112, 0.101], [0.104, 0.099, 0.112, 0.098]]],
        [[[0.096, 0.099, 0.101, 0.097], [0.095, 0.099, 0.102, 0.098]],
         [[0.096, 0.099, 0.102, 0.098], [0.098, 0.102, 0.105, 0.103]],
         [[0.093, 0.095, 0.097, 0.095], [0.100, 0.102, 0.107, 0.103]],
         [[0.099, 0.101, 0.103, 0.101], [0.098, 0.102, 0.104, 0.100]]],
    ],
    [
        [[[0.088, 0.087, 0.110, 0.087], [0.082, 0.083, 0.108, 0.081]],
         [[0.083, 0.082, 0.104, 0.082], [0.082, 0.083, 0.108, 0.081]],
         [[0.089, 0.088, 0.109, 0.087], [0.082, 0.082, 0.109, 0.081]],
         [[0.090, 0.090, 0.108, 0.089], [0.085, 0.084, 0.108, 0.084]]],
        [[[0.088, 0.090, 0.109, 0.088], [0.086, 0.086, 0.109, 0.084]],
         [[0.086, 0.088, 0.108, 0.087], [0.085, 0.086, 0.109, 0.085]],
         [[0.090, 0.090, 0.110, 0.089], [0.087, 0.088, 0.110, 0.086]],
         [[0.093, 0.095, 0.109, 0.093], [0.089, 0.089, 0.111, 0.089]]],
        [[[0.086, 0.090, 0.108, 0.086], [0.085, 0.086, 0.108, 0.081]],
         [[0.085, 0.087, 0.105, 0.084], [0.082, 0.081, 0.104, 0.080]],
         [[0.090, 0.091, 0.109, 0.089], [0.088, 0.088, 0.111, 0.085]],
         [[0.092, 0.092, 0.107, 0.090], [0.093, 0.092, 0.113, 0.091]]],
    ],
];

#[rustfmt::skip]
const GAMMA_RATES: [[[[[f64; 4]; 2]; 4]; 3]; 2] = [
    [
        [[[0.143, 0.081, 0.166, 0.087], [0.157, 0.084, 0.190, 0.092]],
         [[0.151, 0.085, 0.171, 0.093], [0.156, 0.081, 0.190, 0.091]],
         [[0.142, 0.081, 0.167, 0.087], [0.155, 0.078, 0.185, 0.087]],
         [[0.143, 0.082, 0.164, 0.088], [0.150, 0.080, 0.179, 0.088]]],
        [[[0.135, 0.096, 0.147, 0.098], [0.136, 0.092, 0.152, 0.096]],
         [[0.131, 0.092, 0.143, 0.095], [0.140, 0.092, 0.155, 0.095]],
         [[0.130, 0.092, 0.142, 0.092], [0.134, 0.092, 0.151, 0.096]],
         [[0.129, 0.096, 0.140, 0.097], [0.130, 0.090, 0.144, 0.093]]],
        [[[0.123, 0.094, 0.134, 0.096], [0.126, 0.093, 0.136, 0.093]],
         [[0.124, 0.095, 0.133, 0.096], [0.130, 0.094, 0.144, 0.097]],
         [[0.118, 0.094, 0.130, 0.095], [0.130, 0.094, 0.142, 0.098]],
         [[0.123, 0.094, 0.132, 0.096], [0.125, 0.092, 0.135, 0.093]]],
    ],
    [
        [[[0.070, 0.061, 0.107, 0.068], [0.064, 0.053, 0.110, 0.061]],
         [[0.066, 0.059, 0.103, 0.064], [0.062, 0.053, 0.108, 0.062]],
         [[0.071, 0.063, 0.108, 0.069], [0.063, 0.053, 0.108, 0.062]],
         [[0.074, 0.066, 0.107, 0.072], [0.065, 0.055, 0.104, 0.062]]],
        [[[0.081, 0.078, 0.109, 0.079], [0.073, 0.070, 0.107, 0.071]],
         [[0.080, 0.077, 0.107, 0.079], [0.076, 0.072, 0.109, 0.074]],
         [[0.081, 0.077, 0.109, 0.080], [0.076, 0.074, 0.109, 0.076]],
         [[0.087, 0.085, 0.111, 0.086], [0.082, 0.076, 0.112, 0.079]]],
        [[[0.081, 0.080, 0.105, 0.081], [0.077, 0.076, 0.107, 0.076]],
         [[0.081, 0.079, 0.105, 0.079], [0.077, 0.075, 0.106, 0.076]],
         [[0.083, 0.080, 0.107, 0.083], [0.082, 0.079, 0.111, 0.081]],
         [[0.090, 0.088, 0.112, 0.090], [0.086, 0.084, 0.113, 0.084]]],
    ],
];

/// Reference rejection rate for a design on the reference grid (any `B`, `R`
/// and seed), or `None` off the grid.
pub fn reference_rate(design: &DesignSpec) -> Option<f64> {
    let (rates, k_idx) = match design.marginal {
        Marginal::Weibull { k } => (&WEIBULL_RATES, REF_WEIBULL_SHAPES.iter().position(|&s| s == k)?),
        Marginal::Gamma { k } => (&GAMMA_RATES, REF_GAMMA_SHAPES.iter().position(|&s| s == k)?),
        Marginal::PointMass { .. } => return None,
    };
    let expected_n = if design.symmetric {
        REF_N_SYMMETRIC
    } else {
        REF_N_ASYMMETRIC
    };
    if design.n != expected_n || design.alpha != REF_ALPHA || design.scheme.abs_variant {
        return None;
    }
    let rho_idx = REF_RHOS.iter().position(|&r| r == design.rho)?;
    let p_idx = REF_DIMS.iter().position(|&p| p == design.p)?;
    let scheme_idx = reference_schemes(design.scheme.num_boot)
        .iter()
        .position(|s| s == &design.scheme)?;
    Some(rates[usize::from(design.symmetric)][k_idx][rho_idx][p_idx][scheme_idx])
}

fn design_key(design: &DesignSpec) -> Vec<String> {
    vec![
        design.symmetric.to_string(),
        design.n.to_string(),
        design.p.to_string(),
        real17(design.rho),
        design.marginal.family().to_string(),
        real17(design.marginal.shape()),
        real17(design.alpha),
        design.scheme.label(),
        design.scheme.num_boot.to_string(),
        design.num_reps.to_string(),
        design.base_seed.to_string(),
    ]
}

/// CSV fields of an estimate, in `CSV_HEADER` order.
pub fn record_fields(estimate: &RejectionEstimate) -> Vec<String> {
    let mut fields = design_key(&estimate.design);
    fields.extend([
        estimate.rejections.to_string(),
        real17(estimate.rejection_rate),
        real17(estimate.mc_std_error),
        estimate.design.scale_label().to_string(),
        estimate.design.deviations().join(";"),
    ]);
    fields
}

/// Writes a header and one record per estimate.
pub fn write_results<W: Write>(writer: W, estimates: &[RejectionEstimate]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(CSV_HEADER)?;
    for estimate in estimates {
        csv.write_record(record_fields(estimate))?;
    }
    csv.flush()?;
    Ok(())
}

/// A record read back from a results file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultRow {
    fields: Vec<String>,
}

impl ResultRow {
    pub fn get(&self, column: &str) -> Option<&str> {
        let idx = CSV_HEADER.iter().position(|c| *c == column)?;
        self.fields.get(idx).map(String::as_str)
    }

    pub fn rejection_rate(&self) -> Option<f64> {
        self.get("rejection_rate")?.parse().ok()
    }

    fn key(&self) -> &[String] {
        &self.fields[..KEY_COLUMNS]
    }
}

/// Reads a results file written by [`run_table`] or [`write_results`].
pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let sink_error = |message: String| Error::Sink {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::Reader::from_path(path)?;
    if reader.headers()?.iter().ne(CSV_HEADER) {
        return Err(sink_error("header does not match the results format".into()));
    }
    reader
        .records()
        .enumerate()
        .map(|(i, record)| {
            let fields: Vec<String> = record?.iter().map(str::to_string).collect();
            if fields.len() != CSV_HEADER.len() || fields[KEY_COLUMNS].parse::<u64>().is_err() {
                return Err(sink_error(format!("malformed record {}", i + 1)));
            }
            Ok(ResultRow { fields })
        })
        .collect()
}

/// Estimates every design in input order.
///
/// With a sink, designs whose key columns already appear in the file are
/// read back instead of recomputed and new records are appended and flushed
/// after each batch, so an interrupted run resumes where it stopped.
/// Consecutive designs sharing their data settings are evaluated together.
pub fn run_table(configs: &[DesignSpec], sink: Option<&Path>) -> Result<Vec<RejectionEstimate>> {
    if configs.is_empty() {
        return Err(Error::invalid("configs", 0.0, "need at least one design"));
    }
    for design in configs {
        design.validate()?;
    }
    let mut done: HashMap<Vec<String>, u64> = HashMap::new();
    let mut writer = match sink {
        Some(path) => Some(open_sink(path, &mut done)?),
        None => None,
    };
    let mut out = Vec::with_capacity(configs.len());
    let mut start = 0;
    while start < configs.len() {
        let end = start
            + configs[start..]
                .iter()
                .take_while(|d| d.same_data(&configs[start]))
                .count();
        let group = &configs[start..end];
        let pending: Vec<DesignSpec> = group
            .iter()
            .filter(|d| !done.contains_key(&design_key(d)))
            .copied()
            .collect();
        // dedupe within the group so repeated designs run once
        let mut unique: Vec<DesignSpec> = Vec::new();
        for d in pending {
            if !unique.iter().any(|u| design_key(u) == design_key(&d)) {
                unique.push(d);
            }
        }
        let fresh = estimate_rejection_batch(&unique)?;
        if let Some((w, path)) = writer.as_mut() {
            for estimate in &fresh {
                w.write_record(record_fields(estimate))
                    .map_err(|e| sink_failure(path, e.to_string()))?;
            }
            w.flush().map_err(|e| sink_failure(path, e.to_string()))?;
        }
        for estimate in &fresh {
            done.insert(design_key(&estimate.design), estimate.rejections);
        }
        for design in group {
            match fresh.iter().find(|e| e.design == *design) {
                Some(e) => out.push(e.clone()),
                None => out.push(RejectionEstimate::from_count(*design, done[&design_key(design)], 0.0)),
            }
        }
        start = end;
    }
    Ok(out)
}

fn sink_failure(path: &Path, message: String) -> Error {
    Error::Sink {
        path: path.to_path_buf(),
        message,
    }
}

fn open_sink<'p>(
    path: &'p Path,
    done: &mut HashMap<Vec<String>, u64>,
) -> Result<(csv::Writer<BufWriter<File>>, &'p Path)> {
    let existing = path.exists() && std::fs::metadata(path)?.len() > 0;
    if existing {
        for row in read_results(path)? {
            let rejections = row.fields[KEY_COLUMNS].parse().unwrap_or_default();
            done.insert(row.key().to_vec(), rejections);
        }
    }
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    if !existing {
        writer.write_record(CSV_HEADER)?;
        writer.flush()?;
    }
    Ok((writer, path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::estimate_rejection;

    fn tiny(scheme: BootstrapScheme, rho: f64) -> DesignSpec {
        DesignSpec {
            symmetric: true,
            n: 20,
            p: 5,
            rho,
            marginal: Marginal::Gamma { k: 1.0 },
            alpha: 0.1,
            scheme,
            num_reps: 25,
            base_seed: 5,
        }
    }

    fn tiny_grid() -> Vec<DesignSpec> {
        let mut grid = Vec::new();
        for rho in [0.0, 0.5] {
            for scheme in reference_schemes(20) {
                grid.push(tiny(scheme, rho));
            }
        }
        grid
    }

    #[test]
    fn grid_shapes() {
        for table in [ReferenceTable::Weibull, ReferenceTable::Gamma] {
            for symmetric in [false, true] {
                let full = reference_grid(table, symmetric, GridScale::Full, 1);
                assert_eq!(full.len(), 96);
                assert!(full.iter().all(|d| d.deviations().is_empty()));
                assert!(full.iter().all(|d| reference_rate(d).is_some()));
                let desk = reference_grid(table, symmetric, GridScale::Desk, 1);
                assert_eq!(desk.len(), 96);
                assert!(desk.iter().all(|d| d.scale_label() == "desk"));
            }
        }
    }

    #[test]
    fn reference_rate_lookup() {
        let grid = reference_grid(ReferenceTable::Weibull, false, GridScale::Full, 0);
        let rates: Vec<f64> = grid
            .iter()
            .filter(|d| d.marginal == Marginal::Weibull { k: 4.0 } && d.rho == 0.0 && d.p == 400)
            .map(|d| reference_rate(d).unwrap())
            .collect();
        assert_eq!(rates, [0.096, 0.099, 0.101, 0.097]);
        let gamma = DesignSpec {
            p: 800,
            marginal: Marginal::Gamma { k: 1.0 },
            ..grid[0]
        };
        assert_eq!(reference_rate(&gamma), Some(0.157));
        assert_eq!(reference_rate(&DesignSpec { rho: 0.3, ..gamma }), None);
    }

    #[test]
    fn single_config_matches_direct_estimate() {
        let d = tiny(BootstrapScheme::empirical(20), 0.25);
        let table = run_table(&[d], None).unwrap();
        assert_eq!(table.len(), 1);
        assert_eq!(table[0].rejections, estimate_rejection(&d).unwrap().rejections);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        let first = run_table(&tiny_grid(), Some(&a)).unwrap();
        run_table(&tiny_grid(), Some(&b)).unwrap();
        let bytes = std::fs::read(&a).unwrap();
        assert_eq!(bytes, std::fs::read(&b).unwrap());
        let rows = read_results(&a).unwrap();
        assert_eq!(rows.len(), 8);
        for (row, est) in rows.iter().zip(&first) {
            assert_eq!(row.rejection_rate(), Some(est.rejection_rate));
            assert_eq!(row.get("scale"), Some("desk"));
        }
        let mut mem = Vec::new();
        write_results(&mut mem, &first).unwrap();
        assert_eq!(mem, bytes);
    }

    #[test]
    fn resumes_from_partial_sink() {
        let dir = tempfile::tempdir().unwrap();
        let (full, partial) = (dir.path().join("full.csv"), dir.path().join("partial.csv"));
        let grid = tiny_grid();
        let expected = run_table(&grid, Some(&full)).unwrap();
        run_table(&grid[..3], Some(&partial)).unwrap();
        let resumed = run_table(&grid, Some(&partial)).unwrap();
        assert_eq!(std::fs::read(&full).unwrap(), std::fs::read(&partial).unwrap());
        for (a, b) in expected.iter().zip(&resumed) {
            assert_eq!(a.rejections, b.rejections);
            assert_eq!(a.rejection_rate, b.rejection_rate);
        }
        // a completed sink is left untouched
        run_table(&grid, Some(&partial)).unwrap();
        assert_eq!(std::fs::read(&full).unwrap(), std::fs::read(&partial).unwrap());
    }

    #[test]
    fn duplicates_and_foreign_sinks() {
        let d = tiny(BootstrapScheme::empirical(10), 0.0);
        let out = run_table(&[d, d], None).unwrap();
        assert_eq!(out[0], out[1]);
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "x,y\n1,2\n").unwrap();
        assert!(matches!(run_table(&[d], Some(&bad)), Err(Error::Sink { .. })));
        assert!(run_table(&[], None).is_err());
    }

    #[test]
    fn record_formatting() {
        let d = DesignSpec {
            rho: 0.1,
            ..tiny(BootstrapScheme::multiplier(WeightFamily::ThirdOrder { gamma: 0.2 }, 20), 0.0)
        };
        let est = RejectionEstimate::from_count(d, 3, 1.0);
        let fields = record_fields(&est);
        assert_eq!(&fields[..8], ["true", "20", "5", "0.10000000000000001", "gamma", "1", "0.10000000000000001", "third_order(0.2)"]);
        assert_eq!(fields[12], "0.12");
        assert_eq!(fields[14], "desk");
        assert!(fields[15].starts_with("n=20(ref 100);p=5(ref 400|800)"));
    }
}
