//! Golden-file suite: fixture inputs exercising allele flips, palindromic
//! drops, and malformed rows must reproduce the committed outputs byte for
//! byte, and randomized commands must be bit-deterministic across runs.

use std::path::{Path, PathBuf};
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

fn golden(name: &str) -> String {
    std::fs::read_to_string(manifest_dir().join("tests/golden").join(name)).expect("golden file")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf8 stdout")
}

fn read_tmp(path: &Path) -> String {
    std::fs::read_to_string(path).expect("output file")
}

#[test]
fn harmonization_matches_golden_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let harmonized = dir.path().join("harmonized.tsv");
    let report = dir.path().join("report.json");
    let output = run(&[
        "estimate",
        "--exposure",
        "tests/fixtures/exposure_messy.tsv",
        "--outcome",
        "tests/fixtures/outcome_messy.tsv",
        "--method",
        "ivw",
        "--harmonized-out",
        harmonized.to_str().unwrap(),
        "--harmonization-report",
        report.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    assert_eq!(read_tmp(&harmonized), golden("harmonized.tsv"));
    assert_eq!(read_tmp(&report), golden("harmonization_report.json"));
}

#[test]
fn estimates_csv_matches_golden() {
    let output = run(&[
        "estimate",
        "--exposure",
        "tests/fixtures/exposure_clean.tsv",
        "--outcome",
        "tests/fixtures/outcome_clean.tsv",
        "--method",
        "all",
        "--seed",
        "11",
        "--bootstrap",
        "200",
    ]);
    assert!(output.status.success(), "{output:?}");
    assert_eq!(stdout_of(&output), golden("estimates.csv"));
}

#[test]
fn forest_svg_matches_golden_and_is_deterministic() {
    let args = [
        "estimate",
        "--exposure",
        "tests/fixtures/exposure_clean.tsv",
        "--outcome",
        "tests/fixtures/outcome_clean.tsv",
        "--method",
        "all",
        "--seed",
        "11",
        "--bootstrap",
        "200",
        "--format",
        "svg-forest",
    ];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success());
    assert_eq!(stdout_of(&first), golden("forest.svg"));
    assert_eq!(first.stdout, second.stdout, "SVG output must be byte-identical across runs");
}

#[test]
fn selection_matches_golden() {
    let output = run(&[
        "select-ivs",
        "--exposure",
        "tests/fixtures/exposure_clean.tsv",
        "--outcome",
        "tests/fixtures/outcome_clean.tsv",
        "--ld",
        "tests/fixtures/ld_triplet.tsv",
        "--r2",
        "0.01",
        "--p-threshold",
        "5e-8",
    ]);
    assert!(output.status.success(), "{output:?}");
    assert_eq!(stdout_of(&output), golden("select.json"));
}

#[test]
fn simulate_matches_golden_and_is_deterministic() {
    let args = ["simulate", "--config", "tests/fixtures/simulate_small.toml"];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success(), "{first:?}");
    assert_eq!(stdout_of(&first), golden("simulate.csv"));
    assert_eq!(first.stdout, second.stdout, "simulation reports must be seed-deterministic");
}

#[test]
fn parse_check_matches_golden() {
    let output = run(&["parse-check", "--file", "tests/fixtures/exposure_messy.tsv"]);
    assert_eq!(output.status.code(), Some(2), "malformed rows are a data error");
    assert_eq!(stdout_of(&output), golden("parse_check.json"));
}

#[test]
fn estimand_check_matches_golden() {
    let output =
        run(&["estimand-check", "--population", "tests/fixtures/population_late.json"]);
    assert!(output.status.success(), "{output:?}");
    assert_eq!(stdout_of(&output), golden("estimand_check.json"));
}
