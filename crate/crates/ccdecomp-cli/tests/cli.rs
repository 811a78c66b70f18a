//! End-to-end tests driving the compiled binary through generate, classify,
//! extract, decompose, and check workflows in temporary directories.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccdecomp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn spreading_sequence_classifies_as_vanishing() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("seq.csv");
    let out = dir.path().join("cls");
    assert_exit(
        &run(&["gen", "--kind", "vanishing", "--n", "100", "--seed", "7", "--out", path_str(&input)]),
        0,
    );
    let cls = run(&["classify", "--input", path_str(&input), "--out", path_str(&out)]);
    assert_exit(&cls, 0);
    let stdout = String::from_utf8_lossy(&cls.stdout);
    assert!(stdout.contains("Vanishing"), "stdout: {stdout}");
    let verdict: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("classify.json")).unwrap()).unwrap();
    assert_eq!(verdict["kind"], "Vanishing");
    assert!(out.join("profile.csv").exists());
}

#[test]
fn two_cluster_sequence_extracts_two_bubbles_and_checks_clean() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("seq.csv");
    let out = dir.path().join("rep");
    assert_exit(
        &run(&[
            "gen", "--kind", "dichotomy", "--masses", "0.6,0.4", "--rate", "4", "--n", "16",
            "--dim", "2", "--seed", "3", "--out", path_str(&input),
        ]),
        0,
    );
    assert!(input.with_extension("truth.json").exists());

    let ext = run(&["extract", "--input", path_str(&input), "--out", path_str(&out)]);
    assert_exit(&ext, 0);
    let report_path = out.join("report.json");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["verdict"], "Decomposed");
    assert_eq!(report["bubbles"].as_array().unwrap().len(), 2);
    assert!(out.join("bubble_1.csv").exists());
    assert!(out.join("bubble_2.csv").exists());
    assert!(out.join("remainder.csv").exists());

    assert_exit(&run(&["check", "--input", path_str(&report_path)]), 0);
}

#[test]
fn corrupted_report_fails_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("seq.csv");
    let out = dir.path().join("rep");
    run(&[
        "gen", "--kind", "dichotomy", "--n", "12", "--seed", "5", "--out", path_str(&input),
    ]);
    assert_exit(&run(&["extract", "--input", path_str(&input), "--out", path_str(&out)]), 0);

    let report_path = out.join("report.json");
    let mut report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    let mass = report["bubbles"][0]["mass"].as_f64().unwrap();
    report["bubbles"][0]["mass"] = serde_json::json!(mass + 0.2);
    fs::write(&report_path, serde_json::to_string_pretty(&report).unwrap()).unwrap();

    let chk = run(&["check", "--input", path_str(&report_path)]);
    assert_exit(&chk, 1);
    let stderr = String::from_utf8_lossy(&chk.stderr);
    assert!(stderr.contains("problem:"), "stderr: {stderr}");
}

#[test]
fn level_cap_reports_truncation_via_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("seq.csv");
    run(&[
        "gen", "--kind", "dichotomy", "--masses", "0.5,0.3,0.2", "--n", "16", "--dim", "1",
        "--seed", "11", "--out", path_str(&input),
    ]);
    let ext = run(&["extract", "--input", path_str(&input), "--kmax", "1"]);
    assert_exit(&ext, 2);
    assert!(String::from_utf8_lossy(&ext.stdout).contains("Truncated"));
}

#[test]
fn flags_override_config_file_values() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("seq.csv");
    let config = dir.path().join("config.json");
    run(&[
        "gen", "--kind", "dichotomy", "--masses", "0.5,0.3,0.2", "--n", "16", "--dim", "1",
        "--seed", "11", "--out", path_str(&input),
    ]);
    fs::write(&config, r#"{ "k_max": 1 }"#).unwrap();

    // The config file overrides the default level cap and forces truncation.
    let with_file = run(&["extract", "--input", path_str(&input), "--config", path_str(&config)]);
    assert_exit(&with_file, 2);

    // An explicit flag wins over the config file and decomposes fully.
    let with_flag = run(&[
        "extract", "--input", path_str(&input), "--config", path_str(&config), "--kmax", "8",
    ]);
    assert_exit(&with_flag, 0);
}

#[test]
fn repeated_extraction_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("seq.csv");
    run(&[
        "gen", "--kind", "dichotomy", "--n", "14", "--dim", "3", "--seed", "21", "--out",
        path_str(&input),
    ]);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    assert_exit(&run(&["extract", "--input", path_str(&input), "--out", path_str(&out_a)]), 0);
    assert_exit(&run(&["extract", "--input", path_str(&input), "--out", path_str(&out_b)]), 0);
    let a = fs::read(out_a.join("report.json")).unwrap();
    let b = fs::read(out_b.join("report.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn grid_function_family_decomposes_with_sidecar_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let family = dir.path().join("family");
    let out = dir.path().join("dec");
    assert_exit(
        &run(&["gen", "--kind", "bumps", "--n", "10", "--out", path_str(&family)]),
        0,
    );
    assert!(family.join("truth.json").exists());
    assert!(family.join("u_001.gfn").exists());

    // Capture scale 1.6 swallows each bump whole; the default grid derived
    // from the density supports would merge the pair into one ball instead.
    let config = dir.path().join("config.json");
    fs::write(&config, r#"{ "radius_grid": [0.4, 1.6, 2.0] }"#).unwrap();
    let dec = run(&[
        "sobolev", "--input", path_str(&family), "--p", "1.5", "--config", path_str(&config),
        "--out", path_str(&out),
    ]);
    assert_exit(&dec, 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let n_profiles = report["profile_files"].as_array().unwrap().len();
    assert_eq!(n_profiles, 2, "report: {report}");
    assert!(out.join("profile_1.gfn").exists());
    assert!(out.join("profile_2.gfn").exists());
    assert!(out.join("residuals.csv").exists());

    // The nested measure-level report also passes the consistency check.
    assert_exit(&run(&["check", "--input", path_str(&out.join("report.json"))]), 0);
}

#[test]
fn unknown_inputs_produce_clean_errors() {
    let missing = run(&["classify", "--input", "/nonexistent/seq.csv"]);
    assert_exit(&missing, 1);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error:"));

    let bad_kind = run(&["gen", "--kind", "mystery", "--out", "/tmp/x.csv"]);
    assert_exit(&bad_kind, 1);
    assert!(String::from_utf8_lossy(&bad_kind.stderr).contains("mystery"));
}
