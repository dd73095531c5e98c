use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conformal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn iris(command: &str, extra: &[&str]) -> Output {
    let (train, test) = (data("iris_train.csv"), data("iris_test.csv"));
    let mut args = vec![command, "--train", &train, "--test", &test];
    args.extend_from_slice(extra);
    run(&args)
}

fn report(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn cp_report_echoes_config_and_has_one_block_per_epsilon() {
    let r = report(&iris("cp", &["--smoothed", "--taxonomy", "label"]));
    assert_eq!(r["command"], "cp");
    assert_eq!(r["config"]["ncm"], "knn:k=1");
    assert_eq!(r["config"]["taxonomy"], "label");
    assert_eq!(r["config"]["seed"], 0);
    assert_eq!(r["data"]["train"], 100);
    assert_eq!(r["data"]["test"], 25);
    assert_eq!(r["data"]["labels"].as_array().unwrap().len(), 3);
    let blocks = r["result"]["per_epsilon"].as_array().unwrap();
    assert_eq!(blocks.len(), 2);
    assert_eq!(blocks[0]["epsilon"], 0.05);
    assert_eq!(blocks[1]["epsilon"], 0.1);
    assert_eq!(r["result"]["trials"], 25);
}

#[test]
fn report_keys_keep_a_stable_order() {
    let out = iris("venn", &[]);
    let text = String::from_utf8(out.stdout).unwrap();
    let position = |key: &str| text.find(&format!("\"{key}\"")).unwrap();
    assert!(position("command") < position("config"));
    assert!(position("config") < position("data"));
    assert!(position("data") < position("result"));
    assert!(text.ends_with("}\n"));
}

#[test]
fn output_file_matches_standard_output() {
    let dir = tempfile::tempdir().unwrap();
    let path: PathBuf = dir.path().join("report.json");
    let to_file = iris("cp", &["--output", path.to_str().unwrap()]);
    assert!(to_file.status.success());
    assert!(to_file.stdout.is_empty());
    let to_stdout = iris("cp", &[]);
    assert_eq!(std::fs::read(&path).unwrap(), to_stdout.stdout);
}

#[test]
fn icp_without_calibration_is_a_usage_error() {
    let out = iris("icp", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--calibration"));
}

#[test]
fn icp_with_calibration_file_or_fraction() {
    let cal = data("iris_cal.csv");
    let r = report(&iris("icp", &["--calibration", &cal, "--ncm", "cart"]));
    assert_eq!(r["data"]["calibration"], 25);
    assert_eq!(r["config"]["ncm"], "cart:max_depth=5,min_leaf=1");

    let r = report(&iris("icp", &["--calibration-fraction", "0.2"]));
    assert_eq!(r["data"]["calibration"], 20);
    assert_eq!(r["data"]["train"], 80);

    let out = iris("icp", &["--calibration-fraction", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_specs_and_flag_combinations_exit_with_2() {
    for extra in [
        &["--ncm", "svm"][..],
        &["--ncm", "knn:k=0"],
        &["--taxonomy", "knn1"],
        &["--exact", "--online"],
        &["--epsilons", "0.2,0.1"],
    ] {
        let out = iris("cp", extra);
        assert_eq!(out.status.code(), Some(2), "{extra:?}: {}", stderr(&out));
    }
    assert_eq!(
        iris("venn", &["--taxonomy", "label"]).status.code(),
        Some(2)
    );
    assert_eq!(iris("meta", &["--k-folds", "1"]).status.code(), Some(2));
    let (train, test) = (data("reg_train.csv"), data("reg_test.csv"));
    let out = run(&["rrcm", "--train", &train, "--test", &test, "--ncm", "cart"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn data_errors_exit_with_1() {
    let (bad, test) = (data("malformed.csv"), data("iris_test.csv"));
    let out = run(&["cp", "--train", &bad, "--test", &test]);
    assert_eq!(out.status.code(), Some(1));
    let message = stderr(&out);
    assert!(
        message.contains("row 2") && message.contains('b'),
        "{message}"
    );

    let missing = data("missing.csv");
    let out = run(&["venn", "--train", &missing, "--test", &test]);
    assert_eq!(out.status.code(), Some(1));

    let out = iris("cp", &["--label-column", "nope"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn label_column_by_name_matches_the_default() {
    let by_default = report(&iris("cp", &[]));
    let by_name = report(&iris("cp", &["--label-column", "species"]));
    assert_eq!(by_default["result"], by_name["result"]);
}

#[test]
fn rrcm_reports_interval_statistics() {
    let (train, test) = (data("reg_train.csv"), data("reg_test.csv"));
    let r = report(&run(&[
        "rrcm",
        "--train",
        &train,
        "--test",
        &test,
        "--ncm",
        "knn:k=3",
        "--no-convex-hull",
    ]));
    assert_eq!(r["config"]["convex_hull"], false);
    assert!(r["data"].get("labels").is_none());
    let blocks = r["result"]["per_epsilon"].as_array().unwrap();
    assert_eq!(blocks.len(), 2);
    assert!(blocks[0]["mean_width"].as_f64().unwrap() >= blocks[1]["mean_width"].as_f64().unwrap());
}

#[test]
fn meta_writes_roc_records() {
    let dir = tempfile::tempdir().unwrap();
    let roc = dir.path().join("roc.tsv");
    let r = report(&iris("meta", &["--emit-roc", roc.to_str().unwrap()]));
    assert_eq!(r["command"], "meta");
    assert!(r["result"]["training"]["threshold"].is_object());
    let text = std::fs::read_to_string(&roc).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("kind\tfpr\ttpr\tratio"));
    let kinds: Vec<&str> = lines.map(|l| l.split('\t').next().unwrap()).collect();
    for kind in ["roc", "hull", "iso"] {
        assert!(kinds.contains(&kind), "missing {kind}");
    }
}

#[test]
fn same_seed_gives_identical_output() {
    let a = iris("cp", &["--smoothed", "--seed", "1"]);
    let b = iris("cp", &["--smoothed", "--seed", "1"]);
    assert_eq!(a.stdout, b.stdout);
    let r = report(&iris("cp", &["--seed", "5"]));
    assert_eq!(r["config"]["seed"], 5);
}
