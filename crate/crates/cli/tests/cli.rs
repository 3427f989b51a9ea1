use std::path::Path;

use curlab_cli::{run_from, EXIT_OK, EXIT_USAGE};
use serde_json::Value;

fn run(args: &[&str]) -> u8 {
    run_from(std::iter::once("curlab").chain(args.iter().copied()))
}

fn write_config(dir: &Path, json: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_string()
}

fn report_lines(dir: &Path) -> Vec<Value> {
    std::fs::read_to_string(dir.join("report.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(run(&["--help"]), EXIT_OK);
    assert_eq!(run(&["--version"]), EXIT_OK);
    assert_eq!(run(&[]), EXIT_USAGE);
    assert_eq!(run(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(run(&["sweep", "--axis", "q"]), EXIT_USAGE);
    assert_eq!(run(&["counterexample", "no-such-scenario"]), EXIT_USAGE);
    assert_eq!(run(&["counterexample", "mean-is-bad", "--k", "2"]), EXIT_USAGE);
    assert_eq!(run(&["--jobs", "0", "counterexample", "class-collision"]), EXIT_USAGE);
    assert_eq!(run(&["--config", "/nonexistent/config.json", "verify"]), EXIT_USAGE);
}

#[test]
fn bad_configs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for bad in [
        r#"{"checks": ["decomposition-identity", "no-such-check"]}"#,
        r#"{"seeds": []}"#,
        r#"{"delta": 1.5}"#,
        r#"{"unknown_field": 1}"#,
        r#"{"model": {"bundled": "two-point"}}"#,
        r#"{}"#,
    ] {
        let cfg = write_config(dir.path(), bad);
        assert_eq!(run(&["--config", &cfg, "--out", out, "verify"]), EXIT_USAGE, "{bad}");
    }
}

#[test]
fn counterexample_writes_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(run(&["--out", out, "counterexample", "class-collision", "--r", "10"]), EXIT_OK);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("scenario.json")).unwrap()).unwrap();
    assert_eq!(v["chosen"], "f0");
    assert_eq!(v["members"][0]["l_un"], 1.0);
    assert_eq!(v["matches_prediction"], true);
}

#[test]
fn verify_report_has_one_line_per_check_plus_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
            "model": {"bundled": "two-point"},
            "representation": {"identity": {"norm_bound": 1.0}},
            "checks": ["decomposition-identity", "block-chain"],
            "check_losses": ["hinge", "logistic"],
            "b": [2, 3],
            "counterexamples": [{"name": "class-collision", "r": 2.0}]
        }"#,
    );
    assert_eq!(run(&["--config", &cfg, "--out", out, "--no-timestamp", "verify"]), EXIT_OK);
    let lines = report_lines(dir.path());
    // decomposition: 2 losses; block chain: 2 losses × 2 sizes × 2 links
    let checks = lines.iter().filter(|l| l["type"] == "check").count();
    assert_eq!(checks, 2 + 8);
    assert_eq!(lines.iter().filter(|l| l["type"] == "scenario").count(), 1);
    let summary = lines.last().unwrap();
    assert_eq!(summary["type"], "summary");
    assert_eq!(summary["total"], 11);
    assert_eq!(summary["failed"], 0);
    assert!(summary.get("timestamp").is_none());
    assert_eq!(lines.len(), 12);
}

#[test]
fn verify_is_deterministic_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"suite": {"pairs": 5, "seed": 1}}"#);
    let report = |sub: &str, extra: &[&str]| {
        let out = dir.path().join(sub);
        let mut args = vec!["--config", &cfg, "--out", out.to_str().unwrap(), "--no-timestamp"];
        args.extend_from_slice(extra);
        args.push("verify");
        assert_eq!(run(&args), EXIT_OK);
        std::fs::read(out.join("report.jsonl")).unwrap()
    };
    let a = report("a", &[]);
    let b = report("b", &["--jobs", "2"]);
    let c = report("c", &["--seed", "2"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn sample_size_sweep_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
            "model": {"bundled": "two-point"},
            "function_class": {"scaled": {"base": {"identity": {"norm_bound": 1.0}}, "alphas": [0.5, 1.0, 1.5]}},
            "m": [16, 32, 64],
            "seeds": [0, 1, 2, 3]
        }"#,
    );
    assert_eq!(run(&["--config", &cfg, "--out", out, "sweep", "--axis", "m"]), EXIT_OK);
    let mut rdr = csv::Reader::from_path(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap().len(), 7);
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3 * 4 + 3);
    assert_eq!(rows.iter().filter(|r| &r[2] == "median").count(), 3);
}

#[test]
fn block_sweep_reports_exact_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
            "model": {"bundled": "two-point"},
            "representation": {"identity": {"norm_bound": 1.0}},
            "b": [1, 2, 4],
            "m": [100],
            "seeds": [0]
        }"#,
    );
    assert_eq!(run(&["--config", &cfg, "--out", out, "sweep", "--axis", "b"]), EXIT_OK);
    let rows: Vec<_> = csv::Reader::from_path(dir.path().join("sweep.csv"))
        .unwrap()
        .records()
        .map(|r| r.unwrap())
        .collect();
    let exact: Vec<f64> = rows.iter().filter(|r| &r[2] == "mean").map(|r| r[4].parse().unwrap()).collect();
    assert_eq!(exact, vec![0.625, 0.59375, 0.568359375]);
}

#[test]
fn train_writes_a_loadable_representation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
            "model": {"bundled": "signed-singletons"},
            "function_class": {"table": {"d": 2, "norm_bound": 1.0}},
            "k": [1], "m": [64], "steps": 20, "seeds": [0]
        }"#,
    );
    assert_eq!(run(&["--config", &cfg, "--out", out, "train"]), EXIT_OK);
    let file = curlab::representation::RepresentationFile::load(dir.path().join("representation.json")).unwrap();
    let model = curlab::verifier::bundled_model("signed-singletons").unwrap();
    let f = file.to_representation::<f64>(&model).unwrap();
    assert!(f.max_norm(&model).unwrap() <= 1.0 + 1e-12);

    // block training rejects finite classes
    let cfg = write_config(
        dir.path(),
        r#"{"model": {"bundled": "two-point"}, "function_class": {"finite": [{"identity": {"norm_bound": 1.0}}]}, "block": 2}"#,
    );
    assert_eq!(run(&["--config", &cfg, "--out", out, "train"]), EXIT_USAGE);
}
