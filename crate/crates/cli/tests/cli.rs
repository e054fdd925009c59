use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hdboot(args: &[&str]) -> Output {
    hdboot_env(args, &[])
}

fn hdboot_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hdboot"));
    cmd.args(args).env_remove("THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn exact_rademacher_two_point_example() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "x.csv", "0\n2\n");
    let out = hdboot(&["test", &data, "--mu", "1", "--alpha", "0.1", "--bootstrap", "rademacher", "--B", "exact"]);
    let v = json(&out);
    assert_eq!(v["T_n"].as_f64(), Some(0.0));
    let c = v["critical_value"].as_f64().unwrap();
    assert!((c - std::f64::consts::SQRT_2).abs() < 1e-15);
    assert_eq!(v["reject"], Value::Bool(false));
    assert_eq!(v["B"], "exact");
    assert_eq!(v["centering"], "known_mean");
}

#[test]
fn identical_rows_give_zero_critical_value() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "x.csv", "x1,x2\n1.5,-2\n1.5,-2\n1.5,-2\n");
    for scheme in ["empirical", "gaussian", "rademacher", "mammen3", "beta"] {
        let v = json(&hdboot(&["test", &data, "--bootstrap", scheme, "--seed", "1", "--B", "50"]));
        assert_eq!(v["critical_value"].as_f64(), Some(0.0), "{scheme}");
        assert_eq!(v["p"], 2);
    }
}

#[test]
fn eta_raises_the_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "x.csv", "0\n2\n");
    let base = ["test", &data, "--mu", "-0.2", "--bootstrap", "rademacher", "--B", "exact"];
    let plain = json(&hdboot(&base));
    assert_eq!(plain["reject"], Value::Bool(true));
    let mut with_eta = base.to_vec();
    with_eta.extend(["--eta", "0.5"]);
    let inflated = json(&hdboot(&with_eta));
    assert_eq!(inflated["reject"], Value::Bool(false));
    assert_eq!(inflated["critical_value"], plain["critical_value"]);
    assert_eq!(inflated["eta"].as_f64(), Some(0.5));
    let t_n = plain["T_n"].as_f64().unwrap();
    let c = plain["critical_value"].as_f64().unwrap();
    assert!(t_n > c && t_n <= c + 0.5);
}

#[test]
fn seeded_test_runs_are_reproducible_and_unseeded_runs_report_seed() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..30).map(|i| format!("{},{}\n", (i * 7 % 11) as f64 * 0.3, (i % 5) as f64)).collect();
    let data = write(dir.path(), "x.csv", &rows);
    let a = hdboot(&["test", &data, "--seed", "99", "--B", "200"]);
    let b = hdboot_env(&["test", &data, "--seed", "99", "--B", "200"], &[("THREADS", "3")]);
    assert_eq!(a.stdout, b.stdout);
    let unseeded = hdboot(&["test", &data, "--B", "20"]);
    assert!(unseeded.status.success());
    let seed_line = stderr(&unseeded);
    assert!(seed_line.starts_with("seed: "), "{seed_line}");
    let seed: u64 = seed_line.trim()["seed: ".len()..].parse().unwrap();
    assert_eq!(json(&unseeded)["seed"].as_u64(), Some(seed));
}

#[test]
fn input_errors_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ragged = write(dir.path(), "r.csv", "1,2\n3,4\n5\n");
    let out = hdboot(&["test", &ragged]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("row 3"), "{}", stderr(&out));

    let data = write(dir.path(), "x.csv", "1,2\n3,4\n");
    let t_file = write(dir.path(), "t.csv", "0,0,0\n");
    let out = hdboot(&["test", &data, "--t-file", &t_file]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("p = 2"), "{}", stderr(&out));

    let out = hdboot(&["test", &data, "--bootstrap", "wild"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("empirical, gaussian, rademacher, mammen3, beta"));

    let out = hdboot(&["test", "/nonexistent/data.csv"]);
    assert_eq!(out.status.code(), Some(3));

    let out = hdboot(&["test", &data, "--B", "exact", "--bootstrap", "gaussian"]);
    assert_eq!(out.status.code(), Some(2));

    let bad = write(dir.path(), "bad.csv", "1,2\n3,x\n");
    let out = hdboot(&["test", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("row 2, column 2"));

    let out = hdboot_env(&["test", &data], &[("THREADS", "many")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn test_output_file_is_not_created_on_error() {
    let dir = tempfile::tempdir().unwrap();
    let ragged = write(dir.path(), "r.csv", "1,2\n3\n");
    let target = dir.path().join("out.json");
    let out = hdboot(&["test", &ragged, "--output", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!target.exists());
}

const SMALL_CONFIG: &str = r#"{
  "schema_version": 1,
  "base_seed": 7,
  "designs": [
    {
      "n": 60, "p": 12, "rho": 0.25,
      "marginal": { "family": "weibull", "k": 4 },
      "schemes": [
        { "bootstrap": "empirical", "num_boot": 40 },
        { "bootstrap": "mammen3", "num_boot": 40 }
      ],
      "num_reps": 30
    },
    {
      "symmetric": true, "n": 30, "p": 8,
      "marginal": { "family": "gamma", "k": 1 },
      "schemes": [{ "bootstrap": "rademacher", "num_boot": 40 }],
      "num_reps": 30
    }
  ]
}"#;

#[test]
fn simulate_writes_one_row_per_design_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "c.json", SMALL_CONFIG);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let out = hdboot(&["simulate", &config, "--output", a.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = hdboot_env(&["simulate", &config, "--output", b.to_str().unwrap()], &[("THREADS", "2")]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.as_bytes(), std::fs::read(&b).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("symmetric,n,p,rho,marginal,k,alpha,scheme"));
    assert!(lines[2].contains("third_order(0.2)"));
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        let rate: f64 = fields[12].parse().unwrap();
        assert!((0.0..=1.0).contains(&rate));
        assert_eq!(fields[14], "desk");
    }
    // stdout mode produces the same bytes
    let stdout = hdboot(&["simulate", &config]);
    assert_eq!(stdout.stdout, text.as_bytes());
}

#[test]
fn simulate_resumes_an_interrupted_sink() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "c.json", SMALL_CONFIG);
    let full = dir.path().join("full.csv");
    assert!(hdboot(&["simulate", &config, "--output", full.to_str().unwrap()]).status.success());
    let text = std::fs::read_to_string(&full).unwrap();
    let partial = dir.path().join("partial.csv");
    let first_two: String = text.lines().take(2).map(|l| format!("{l}\n")).collect();
    std::fs::write(&partial, first_two).unwrap();
    assert!(hdboot(&["simulate", &config, "--output", partial.to_str().unwrap()]).status.success());
    assert_eq!(std::fs::read_to_string(&partial).unwrap(), text);
}

#[test]
fn simulate_config_errors_report_json_path_and_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("out.csv");
    let bad = SMALL_CONFIG.replace("\"k\": 1", "\"k\": \"one\"");
    let config = write(dir.path(), "bad.json", &bad);
    let out = hdboot(&["simulate", &config, "--output", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("designs[1].marginal"), "{}", stderr(&out));
    assert!(!target.exists());

    let bad = SMALL_CONFIG.replace("\"rho\": 0.25", "\"rho\": 1.25");
    let config = write(dir.path(), "bad_rho.json", &bad);
    let out = hdboot(&["simulate", &config, "--output", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("designs[0]"), "{}", stderr(&out));
    assert!(!target.exists());
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["table1_full", "table1_desk", "table2_full", "table2_desk", "weibull_k4_desk", "table1_k4_row_full"] {
        let path = root.join(format!("{name}.json"));
        let text = std::fs::read_to_string(&path).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema_version"], 1, "{name}");
    }
}

#[test]
fn validate_epsilon_law_example() {
    let v = json(&hdboot(&["validate", "--only", "epsilon-law", "--n", "4", "--seed", "3"]));
    assert_eq!(v["pass"], Value::Bool(true));
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 5);
    for c in checks {
        assert!((c["observed"].as_f64().unwrap() - 0.2).abs() < 0.01);
        assert!(c.get("target").is_some() && c.get("tolerance").is_some());
    }
}

#[test]
fn validate_third_order_moment_example() {
    let v = json(&hdboot(&[
        "validate", "--only", "weight-moments", "--family", "third_order", "--gamma", "0.2", "--seed", "4",
    ]));
    let third = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["item"].as_str().unwrap().ends_with("E[e^3]"))
        .unwrap();
    assert!((third["observed"].as_f64().unwrap() - 1.0).abs() < 0.05);
    assert_eq!(v["pass"], Value::Bool(true));
}

#[test]
fn validate_exact_suites_pass() {
    let out = hdboot(&["validate", "--only", "epsilon-exact,w-invariance,third-order-identities,gamma-roundtrip,normal-cdf", "--seed", "1"]);
    assert_eq!(json(&out)["pass"], Value::Bool(true));
}

#[test]
fn validate_reports_failure_with_exit_one() {
    // third-order weights with gamma = 0.01 violate E[exp(e^2/4)] <= 2
    let out = hdboot(&[
        "validate", "--only", "weight-moments", "--family", "mammen3", "--gamma", "0.01", "--seed", "5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["pass"], Value::Bool(false));
}

#[test]
fn weights_rademacher_example() {
    let out = hdboot(&["weights", "--family", "rademacher", "--count", "4", "--seed", "11"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let draws: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(draws.len(), 4);
    assert!(draws.iter().all(|d| *d == "1" || *d == "-1"));
    let summary: Value = serde_json::from_str(&stderr(&out)).unwrap();
    assert_eq!(summary["count"], 4);
    assert_eq!(summary["moments"][1].as_f64(), Some(1.0));
}

#[test]
fn weights_moment_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("s.json");
    let draws = dir.path().join("d.csv");
    for (family, extra, third) in [
        ("mammen3", vec!["--gamma", "0.2"], 1.0),
        ("beta", vec!["--beta-alpha", "0.5", "--beta-beta", "1.5", "--beta-v", "0"], 1.0),
    ] {
        let mut args = vec!["weights", "--family", family, "--count", "1000000", "--seed", "8"];
        args.extend(extra);
        args.extend(["--output", draws.to_str().unwrap(), "--summary", summary.to_str().unwrap()]);
        assert!(hdboot(&args).status.success());
        let s: Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
        let m = |k: usize| s["moments"][k].as_f64().unwrap();
        assert!(m(0).abs() < 0.01, "{family}");
        assert!((m(1) - 1.0).abs() < 0.01, "{family}");
        assert!((m(2) - third).abs() < 0.05, "{family}");
    }
}

#[test]
fn weights_reject_bad_parameters_with_ranges() {
    let out = hdboot(&["weights", "--family", "mammen3", "--gamma", "0.3", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("0.276393"), "{}", stderr(&out));
    let out = hdboot(&["weights", "--family", "beta", "--beta-v", "2", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
}
