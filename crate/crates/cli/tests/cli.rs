//! Command-line behavior: exit-code partitioning and failure handling on
//! malformed input. No panic may escape to the shell.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrkit"))
        .args(args)
        .current_dir(manifest_dir())
        .output()
        .expect("binary runs")
}

fn write_temp(content: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(content.as_bytes()).unwrap();
    f
}

#[test]
fn happy_path_estimate_exits_zero_with_csv() {
    let output = run(&[
        "estimate",
        "--exposure",
        "tests/fixtures/exposure_clean.tsv",
        "--outcome",
        "tests/fixtures/outcome_clean.tsv",
        "--method",
        "ivw",
    ]);
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.starts_with("method,beta_hat,se,ci_lower,ci_upper,diagnostics"));
    assert!(stdout.lines().nth(1).unwrap().starts_with("ivw,"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let output = run(&["estimate", "--definitely-not-a-flag"]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("--help") || stderr.to_lowercase().contains("usage"), "{stderr}");
}

#[test]
fn help_exits_zero() {
    let output = run(&["--help"]);
    assert_eq!(output.status.code(), Some(0));
}

#[test]
fn missing_file_is_a_data_error() {
    let output = run(&[
        "estimate",
        "--exposure",
        "/nonexistent/exposure.tsv",
        "--outcome",
        "tests/fixtures/outcome_clean.tsv",
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn bad_alpha_is_a_usage_error() {
    let output = run(&[
        "estimate",
        "--exposure",
        "tests/fixtures/exposure_clean.tsv",
        "--outcome",
        "tests/fixtures/outcome_clean.tsv",
        "--alpha",
        "1.5",
    ]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn zero_instrument_strength_is_a_numeric_error() {
    let header = "snp\teffect_allele\tother_allele\tbeta\tse\tpval\n";
    let exposure = write_temp(&format!("{header}rs1\tA\tG\t0\t0.01\t1e-10\n"));
    let outcome = write_temp(&format!("{header}rs1\tA\tG\t0.1\t0.01\t0.5\n"));
    let output = run(&[
        "estimate",
        "--exposure",
        exposure.path().to_str().unwrap(),
        "--outcome",
        outcome.path().to_str().unwrap(),
        "--method",
        "ivw",
    ]);
    assert_eq!(output.status.code(), Some(3), "{output:?}");
}

#[test]
fn empty_overlap_is_a_data_error() {
    let header = "snp\teffect_allele\tother_allele\tbeta\tse\tpval\n";
    let exposure = write_temp(&format!("{header}rs1\tA\tG\t0.1\t0.01\t1e-10\n"));
    let outcome = write_temp(&format!("{header}rs2\tA\tG\t0.1\t0.01\t0.5\n"));
    let output = run(&[
        "estimate",
        "--exposure",
        exposure.path().to_str().unwrap(),
        "--outcome",
        outcome.path().to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("no overlapping SNPs"), "{stderr}");
}

#[test]
fn malformed_population_is_a_data_error_not_a_panic() {
    let pop = write_temp("{\"units\": [{\"weight\": \"1/2\"}]}");
    let output = run(&["estimand-check", "--population", pop.path().to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(!stderr.contains("panicked"), "{stderr}");
}

#[test]
fn invalid_population_weights_are_a_data_error() {
    let pop = write_temp(
        r#"{"units":[{"weight":"1/3","d0":0,"d1":1,"y00":0,"y01":1,"y10":0,"y11":1,"z_prob":"1/2"}]}"#,
    );
    let output = run(&["estimand-check", "--population", pop.path().to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("weights sum"), "{stdout}");
}

#[test]
fn strict_parse_check_stops_at_first_error() {
    let output = run(&["parse-check", "--file", "tests/fixtures/exposure_messy.tsv", "--strict"]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("effect allele equals other allele"), "{stderr}");
}

#[test]
fn robust_ci_runs_and_reports_seed() {
    let output = run(&[
        "robust-ci",
        "--exposure",
        "tests/fixtures/exposure_clean.tsv",
        "--outcome",
        "tests/fixtures/outcome_clean.tsv",
        "--resamples",
        "20",
        "--seed",
        "3",
    ]);
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(doc["seed"], 3);
    let lower = doc["robust_ci"]["lower"].as_f64().unwrap();
    let upper = doc["robust_ci"]["upper"].as_f64().unwrap();
    let p_lower = doc["robust_ci"]["pointwise_lower"].as_f64().unwrap();
    let p_upper = doc["robust_ci"]["pointwise_upper"].as_f64().unwrap();
    assert!(lower <= p_lower && p_upper <= upper);
}

#[test]
fn simulate_seed_flag_overrides_config() {
    let base = run(&["simulate", "--config", "tests/fixtures/simulate_small.toml"]);
    let overridden = run(&[
        "simulate",
        "--config",
        "tests/fixtures/simulate_small.toml",
        "--seed",
        "999",
    ]);
    assert!(base.status.success() && overridden.status.success());
    assert_ne!(base.stdout, overridden.stdout);
}
