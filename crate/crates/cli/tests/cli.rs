use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use clap::CommandFactory;
use lyap_cli::scenario::FIELDS;
use lyap_cli::Cli;
use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn lyap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lyap")).args(args).output().expect("binary runs")
}

fn record(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is a record")
}

fn rows(csv_path: &Path) -> Vec<Vec<f64>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(csv_path).unwrap();
    r.records().map(|row| row.unwrap().iter().map(|x| x.parse().unwrap()).collect()).collect()
}

#[test]
fn constant_diagonal_cocycle_has_exponent_ln_two() {
    let rec = record(&lyap(&["lyapunov", "--scenario", scenario("lyapunov_diagonal.json").to_str().unwrap()]));
    assert_eq!(rec["schema"], "lyap-record/1");
    assert_eq!(rec["software"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(rec["scenario_sha256"].as_str().unwrap().len(), 64);
    let l = rec["payload"]["result"]["value"].as_f64().unwrap();
    assert!((l - 2f64.ln()).abs() < 1e-14, "{l}");
}

#[test]
fn free_laplacian_has_one_band() {
    let dir = tempfile::tempdir().unwrap();
    let out = lyap(&["bands", "--scenario", scenario("bands_free.json").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    record(&out);
    let text = std::fs::read_to_string(dir.path().join("bands.csv")).unwrap();
    assert!(text.starts_with("# schema: lyap-csv/1\nband,left,right,length\n"));
    let table = rows(&dir.path().join("bands.csv"));
    assert_eq!(table.len(), 1);
    assert_eq!(table[0][0], 0.0);
    assert!((table[0][1] + 2.0).abs() < 1e-12 && (table[0][2] - 2.0).abs() < 1e-12, "{table:?}");
    let svg = std::fs::read_to_string(dir.path().join("bands.svg")).unwrap();
    assert!(svg.starts_with("<!-- schema: lyap-svg/1 -->\n<svg"));
}

#[test]
fn boundary_form_reports_both_values_and_their_difference() {
    let rec = record(&lyap(&["phi", "--scenario", scenario("phi_boundary.json").to_str().unwrap()]));
    let r = &rec["payload"]["result"];
    let a = r["phi"]["value"].as_f64().unwrap();
    let b = r["boundary"]["value"].as_f64().unwrap();
    let d = r["difference"].as_f64().unwrap();
    assert_eq!(d, a - b);
    assert!(a > 0.0);
    assert!(d.abs() <= 2.0 * r["combined_error"].as_f64().unwrap() + 1e-14, "{r}");
}

#[test]
fn missing_scenario_is_a_schema_error() {
    let out = lyap(&["bands", "--scenario", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema error"));
}

#[test]
fn unknown_fields_are_schema_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    std::fs::write(&path, r#"{"schema_version": 1, "operation": "bands", "potentail": {"kind": "constant", "value": 0}}"#).unwrap();
    assert_eq!(lyap(&["bands", "--scenario", path.to_str().unwrap()]).status.code(), Some(2));
    let bad_params = lyap(&["bands", "--scenario", scenario("bands_free.json").to_str().unwrap(), "--params", r#"{"resolution": 1}"#]);
    assert_eq!(bad_params.status.code(), Some(2));
    let wrong_op = lyap(&["lyapunov", "--scenario", scenario("bands_free.json").to_str().unwrap()]);
    assert_eq!(wrong_op.status.code(), Some(2));
}

#[test]
fn exhausted_budget_exits_with_four() {
    let out = lyap(&[
        "search",
        "--scenario",
        scenario("search_closed_gap.json").to_str().unwrap(),
        "--params",
        r#"{"delta": 0.5, "budget": 0, "basis": {"kind": "sites"}}"#,
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    let rec: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rec["payload"]["status"], "budget_exhausted");
}

#[test]
fn closed_gap_search_succeeds() {
    let rec = record(&lyap(&["search", "--scenario", scenario("search_closed_gap.json").to_str().unwrap()]));
    assert_eq!(rec["payload"]["result"]["outcome"], "found");
}

#[test]
fn payloads_are_byte_identical_across_runs_and_threads() {
    let run = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = lyap(&[
            "lyapunov",
            "--scenario",
            scenario("almost_mathieu_sweep.json").to_str().unwrap(),
            "--threads",
            threads,
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        let rec = record(&out);
        let payload = std::fs::read(dir.path().join("payload.json")).unwrap();
        let csv = std::fs::read(dir.path().join("lyapunov.csv")).unwrap();
        (rec["scenario_sha256"].clone(), payload, csv)
    };
    let first = run("1");
    assert_eq!(first, run("1"));
    assert_eq!(first, run("4"));
}

#[test]
fn quantita_scan_writes_a_heat_map() {
    let dir = tempfile::tempdir().unwrap();
    let rec = record(&lyap(&[
        "quantita-scan",
        "--scenario",
        scenario("quantita_period2.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]));
    assert!(rec["payload"]["result"]["fraction"].as_f64().unwrap() >= 0.9);
    assert_eq!(rows(&dir.path().join("quantita.csv")).len(), 32 * 128);
    assert!(dir.path().join("quantita.svg").exists());
}

#[test]
fn reproduce_catches_a_corrupted_weight() {
    let bad = lyap(&["reproduce", "--params", r#"{"criteria": [1], "weight_scale": 1.001}"#]);
    assert_eq!(bad.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("[FAIL]  1. weight normalization"));
    let good = lyap(&["reproduce", "--params", r#"{"criteria": [1]}"#]);
    assert!(good.status.success());
    assert!(String::from_utf8_lossy(&good.stdout).contains("1 of 1 lines pass"));
}

/// Flags and scenario fields correspond one to one: the operation is the
/// subcommand, `--scenario` names the file, and `schema_version` only
/// exists in files.
#[test]
fn flags_mirror_the_scenario_schema() {
    let mut expected: BTreeSet<String> =
        FIELDS.iter().filter(|f| !matches!(**f, "schema_version" | "operation")).map(|f| f.to_string()).collect();
    expected.insert("scenario".into());
    let cmd = Cli::command();
    for sub in cmd.get_subcommands() {
        let flags: BTreeSet<String> = sub.get_arguments().filter_map(|a| a.get_long()).map(str::to_string).collect();
        assert_eq!(flags, expected, "{}", sub.get_name());
        let help = lyap(&[sub.get_name(), "--help"]);
        let text = String::from_utf8_lossy(&help.stdout);
        for f in &expected {
            assert!(text.contains(&format!("--{f}")), "{} --help lacks --{f}", sub.get_name());
        }
    }
    let names: BTreeSet<&str> = cmd.get_subcommands().map(|s| s.get_name()).collect();
    let ops: BTreeSet<&str> =
        ["lyapunov", "certify", "bands", "ids", "phi", "ab-check", "search", "quantita-scan", "reproduce"].into();
    assert_eq!(names, ops);
}

#[test]
fn inline_scenarios_cover_the_remaining_operations() {
    let period2 = r#"{"family": "periodic_orbits", "orbits": [{"period": 2, "weight": 1.0}]}"#;
    let complex = r#"{"kind": "symbol", "potential": {"kind": "periodic_table", "values": [[[0.5, 0.7], [-1.0, 0.4]]]}}"#;
    let cert = record(&lyap(&["certify", "--base", period2, "--cocycle", complex]));
    let r = &cert["payload"]["result"];
    assert!(r["certificate"]["margin"].as_f64().unwrap() > 0.0);
    assert!(r["lyapunov"]["discrepancy"].as_f64().unwrap() < 1e-9);

    let dir = tempfile::tempdir().unwrap();
    let potential = r#"{"kind": "periodic_table", "values": [[1.0, -1.0]]}"#;
    record(&lyap(&["ids", "--base", period2, "--potential", potential, "--out", dir.path().to_str().unwrap()]));
    let table = rows(&dir.path().join("ids.csv"));
    assert_eq!(table.len(), 513);
    assert_eq!(table[0][1], 0.0);
    assert_eq!(table[512][1], 1.0);

    let fixed = r#"{"family": "periodic_orbits", "orbits": [{"period": 1, "weight": 1.0}]}"#;
    let shear = r#"{"kind": "constant", "matrix": [[1.0, 3.0], [0.0, 1.0]]}"#;
    let ab = record(&lyap(&["ab-check", "--base", fixed, "--cocycle", shear, "--params", r#"{"theta_nodes": 4096}"#]));
    assert!(ab["payload"]["result"]["difference"].as_f64().unwrap().abs() < 1e-5, "{ab}");
}
