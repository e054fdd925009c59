//! `simulate`: JSON design config to a rejection-probability CSV.

use std::path::Path;

use serde::Deserialize;

use hdboot::sim::{
    reference_grid_with, run_table, write_results, DesignSpec, GridScale, GridSettings, Marginal, ReferenceTable,
};

use crate::args::{build_scheme, resolve_seed, SchemeName, SimulateArgs, WeightParams};
use crate::error::CliError;
use crate::output::emit;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimConfig {
    schema_version: u32,
    base_seed: Option<u64>,
    #[serde(default)]
    designs: Vec<DesignEntry>,
    #[serde(default)]
    grids: Vec<GridEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DesignEntry {
    #[serde(default)]
    symmetric: bool,
    n: usize,
    p: usize,
    #[serde(default)]
    rho: f64,
    marginal: MarginalEntry,
    #[serde(default = "default_alpha")]
    alpha: f64,
    schemes: Vec<SchemeEntry>,
    num_reps: usize,
    base_seed: Option<u64>,
}

fn default_alpha() -> f64 {
    0.1
}

#[derive(Debug, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
enum MarginalEntry {
    Weibull { k: f64 },
    Gamma { k: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemeEntry {
    bootstrap: SchemeName,
    num_boot: usize,
    gamma: Option<f64>,
    beta_alpha: Option<f64>,
    beta_beta: Option<f64>,
    beta_v: Option<f64>,
    #[serde(default)]
    abs: bool,
    #[serde(default)]
    uncentered: bool,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum TableName {
    Weibull,
    Gamma,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum DesignKind {
    Asymmetric,
    Symmetric,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ScaleName {
    Full,
    Desk,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridEntry {
    table: TableName,
    design: DesignKind,
    scale: ScaleName,
    dims: Option<Vec<usize>>,
    num_boot: Option<usize>,
    num_reps: Option<usize>,
    base_seed: Option<u64>,
}

fn at(path: String) -> impl FnOnce(CliError) -> CliError {
    move |err| match err {
        CliError::Usage(msg) => CliError::Usage(format!("{path}: {msg}")),
        other => other,
    }
}

impl SchemeEntry {
    fn params(&self) -> WeightParams {
        let d = WeightParams::default();
        WeightParams {
            gamma: self.gamma.unwrap_or(d.gamma),
            beta_alpha: self.beta_alpha.unwrap_or(d.beta_alpha),
            beta_beta: self.beta_beta.unwrap_or(d.beta_beta),
            beta_v: self.beta_v.unwrap_or(d.beta_v),
        }
    }
}

fn expand_design(entry: &DesignEntry, seed: u64, path: &str, out: &mut Vec<DesignSpec>) -> Result<(), CliError> {
    if entry.schemes.is_empty() {
        return Err(CliError::Usage(format!("{path}.schemes: need at least one scheme")));
    }
    let marginal = match entry.marginal {
        MarginalEntry::Weibull { k } => Marginal::Weibull { k },
        MarginalEntry::Gamma { k } => Marginal::Gamma { k },
    };
    for (j, s) in entry.schemes.iter().enumerate() {
        let spath = format!("{path}.schemes[{j}]");
        let scheme = build_scheme(s.bootstrap, &s.params(), s.num_boot, s.abs, s.uncentered).map_err(at(spath))?;
        let design = DesignSpec {
            symmetric: entry.symmetric,
            n: entry.n,
            p: entry.p,
            rho: entry.rho,
            marginal,
            alpha: entry.alpha,
            scheme,
            num_reps: entry.num_reps,
            base_seed: entry.base_seed.unwrap_or(seed),
        };
        design
            .validate()
            .map_err(CliError::from)
            .map_err(at(path.to_string()))?;
        out.push(design);
    }
    Ok(())
}

fn expand_grid(entry: &GridEntry, seed: u64, path: &str) -> Result<Vec<DesignSpec>, CliError> {
    let scale = match entry.scale {
        ScaleName::Full => GridScale::Full,
        ScaleName::Desk => GridScale::Desk,
    };
    let defaults = scale.settings();
    let settings = GridSettings {
        dims: entry.dims.clone().unwrap_or(defaults.dims),
        num_boot: entry.num_boot.unwrap_or(defaults.num_boot),
        num_reps: entry.num_reps.unwrap_or(defaults.num_reps),
    };
    if settings.dims.is_empty() {
        return Err(CliError::Usage(format!("{path}.dims: need at least one dimension")));
    }
    let table = match entry.table {
        TableName::Weibull => ReferenceTable::Weibull,
        TableName::Gamma => ReferenceTable::Gamma,
    };
    let symmetric = matches!(entry.design, DesignKind::Symmetric);
    let designs = reference_grid_with(table, symmetric, &settings, entry.base_seed.unwrap_or(seed));
    for d in &designs {
        d.validate().map_err(CliError::from).map_err(at(path.to_string()))?;
    }
    Ok(designs)
}

/// Parses and validates a config; no computation happens here.
pub fn load_designs(text: &str, cli_seed: Option<u64>) -> Result<Vec<DesignSpec>, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: SimConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Usage(format!("config {path}: {}", e.into_inner()))
    })?;
    if config.schema_version != SCHEMA_VERSION {
        return Err(CliError::Usage(format!(
            "config schema_version: expected {SCHEMA_VERSION}, got {}",
            config.schema_version
        )));
    }
    if config.designs.is_empty() && config.grids.is_empty() {
        return Err(CliError::Usage("config: needs at least one entry in designs or grids".into()));
    }
    let needs_seed = config.base_seed.is_none()
        && cli_seed.is_none()
        && (config.designs.iter().any(|d| d.base_seed.is_none()) || config.grids.iter().any(|g| g.base_seed.is_none()));
    let seed = match cli_seed.or(config.base_seed) {
        Some(s) => s,
        None if needs_seed => resolve_seed(None),
        None => 0,
    };
    let mut designs = Vec::new();
    for (i, entry) in config.designs.iter().enumerate() {
        expand_design(entry, seed, &format!("config designs[{i}]"), &mut designs)?;
    }
    for (i, entry) in config.grids.iter().enumerate() {
        designs.extend(expand_grid(entry, seed, &format!("config grids[{i}]"))?);
    }
    Ok(designs)
}

pub fn run(args: SimulateArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::io(&args.config, e))?;
    let designs = load_designs(&text, args.seed)?;
    match args.output.as_deref() {
        Some(path) => {
            check_output_dir(path)?;
            run_table(&designs, Some(path))?;
            Ok(())
        }
        None => {
            let estimates = run_table(&designs, None)?;
            let mut bytes = Vec::new();
            write_results(&mut bytes, &estimates)?;
            emit(None, &bytes)
        }
    }
}

fn check_output_dir(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            Err(CliError::io(path, "parent directory does not exist"))
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_errors_carry_json_paths() {
        let bad = r#"{"schema_version": 1, "base_seed": 1, "designs": [
            {"n": 10, "p": 2, "marginal": {"family": "weibull", "k": 2},
             "schemes": [{"bootstrap": "gausian", "num_boot": 10}], "num_reps": 5}]}"#;
        let msg = load_designs(bad, None).unwrap_err().to_string();
        assert!(msg.contains("designs[0].schemes[0].bootstrap"), "{msg}");
        assert!(msg.contains("rademacher"), "{msg}");

        let bad_rho = bad.replace("gausian", "gaussian").replace("\"p\": 2", "\"p\": 2, \"rho\": 1.5");
        let msg = load_designs(&bad_rho, None).unwrap_err().to_string();
        assert!(msg.contains("designs[0]") && msg.contains("rho"), "{msg}");

        let unknown = r#"{"schema_version": 1, "desgns": []}"#;
        assert!(load_designs(unknown, None).unwrap_err().to_string().contains("desgns"));
        let version = r#"{"schema_version": 2, "grids": []}"#;
        assert!(load_designs(version, None).unwrap_err().to_string().contains("schema_version"));
    }

    #[test]
    fn grids_and_designs_expand_in_order() {
        let text = r#"{"schema_version": 1, "base_seed": 9,
            "designs": [{"n": 10, "p": 2, "marginal": {"family": "gamma", "k": 1},
                         "schemes": [{"bootstrap": "empirical", "num_boot": 10},
                                     {"bootstrap": "third_order", "num_boot": 10, "gamma": 0.1}],
                         "num_reps": 5}],
            "grids": [{"table": "weibull", "design": "asymmetric", "scale": "desk", "dims": [50]}]}"#;
        let designs = load_designs(text, None).unwrap();
        assert_eq!(designs.len(), 2 + 48);
        assert_eq!(designs[1].scheme.label(), "third_order(0.1)");
        assert!(designs.iter().all(|d| d.base_seed == 9));
        assert_eq!(load_designs(text, Some(3)).unwrap()[0].base_seed, 3);
    }

    #[test]
    fn fractional_values_inside_tagged_entries() {
        let text = r#"{"schema_version": 1, "base_seed": 1,
            "designs": [{"n": 10, "p": 2, "rho": 0.25, "marginal": {"family": "gamma", "k": 2.5},
                         "schemes": [{"bootstrap": "beta", "num_boot": 10, "beta_v": 0.5}], "num_reps": 5}]}"#;
        let designs = load_designs(text, None).unwrap();
        assert_eq!(designs[0].marginal, Marginal::Gamma { k: 2.5 });
        assert_eq!(designs[0].scheme.label(), "beta(0.5,1.5,0.5)");
    }
}
