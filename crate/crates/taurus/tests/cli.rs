use std::path::{Path, PathBuf};

use serde_json::Value;
use taurus::cli::main_with_args;
use taurus::commands::parse_range;

fn program(name: &str) -> String {
    format!("{}/programs/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

fn run(out: &Path, args: &[&str]) -> i32 {
    let mut all = vec!["taurus".to_string(), "--out".to_string(), out.display().to_string()];
    all.extend(args.iter().map(|s| s.to_string()));
    main_with_args(all)
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: PathBuf) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn run_func_matches_the_interpreter() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = dir.path().join("in.json");
    std::fs::write(&inputs, r#"{"x": [1], "w": [1]}"#).unwrap();
    let code = run(
        dir.path(),
        &[
            "run-func",
            &program("weighted_relu"),
            "--inputs",
            inputs.to_str().unwrap(),
        ],
    );
    assert_eq!(code, 0);
    let r = json(dir.path().join("results.json"));
    assert_eq!(r["outputs"]["out"]["expected"], serde_json::json!([0]));
    assert_eq!(r["outputs"]["out"]["actual"], serde_json::json!([0]));
    assert_eq!(r["match"], true);
    assert_eq!(r["counters"]["pbs"], 1);
}

#[test]
fn run_func_with_stored_keys() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["--params", "toy", "keygen"]), 0);
    let keys = dir.path().join("keys.tkey");
    let code = run(
        dir.path(),
        &[
            "--params",
            "toy",
            "run-func",
            &program("fanout3"),
            "--keys",
            keys.to_str().unwrap(),
        ],
    );
    // fanout3 is width 3; toy is width 2.
    assert_eq!(code, 2);
    let code = run(
        dir.path(),
        &["run-func", &program("weighted_relu"), "--keys", keys.to_str().unwrap()],
    );
    assert_eq!(code, 2, "toy keys must not load for desk");
}

#[test]
fn overflowing_program_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["run-func", &program("overflow")]), 1);
    let r = json(dir.path().join("results.json"));
    let severities: Vec<_> = r["diagnostics"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["severity"].clone())
        .collect();
    assert!(severities.contains(&Value::String("error".into())), "{severities:?}");
}

#[test]
fn dedup_report_percentages() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(run(d, &["dedup-report", &program("fanout3")]), 0);
    let rows = csv_rows(d.join("dedup.csv"));
    assert_eq!(rows[0][..5], ["ks_dedup", "true", "3", "1", "66.67"]);

    assert_eq!(run(d, &["dedup-report", &program("tensor_map64")]), 0);
    let rows = csv_rows(d.join("dedup.csv"));
    assert_eq!(rows[1][..5], ["acc_dedup", "true", "64", "1", "98.44"]);

    assert_eq!(
        run(
            d,
            &[
                "dedup-report",
                &program("tensor_map64"),
                "--no-acc-dedup",
                "--no-ks-dedup"
            ]
        ),
        0
    );
    for row in csv_rows(d.join("dedup.csv")) {
        assert_eq!(row[1], "false");
        assert_eq!(row[2], row[3]);
        assert_eq!(row[4], "0.0");
    }
}

#[test]
fn compile_then_simulate_equals_run_perf() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let p = program("gpt2_dense");
    assert_eq!(run(d, &["compile", &p, "--clusters", "2"]), 0);
    let compiled = d.join("compiled.json");
    assert_eq!(run(d, &["simulate", compiled.to_str().unwrap()]), 0);
    assert_eq!(run(d, &["run-perf", &p, "--clusters", "2", "--no-xpu"]), 0);
    let a = json(d.join("report.json"));
    let b = json(d.join("taurus.json"));
    assert_eq!(a, b);
    assert_eq!(a["machine"], "taurus");

    assert_eq!(run(d, &["compile", &p, "--emit", "stats"]), 0);
    let s = json(d.join("stats.json"));
    assert_eq!(s["acc_reduction_pct"], 99.74);
    assert_eq!(s["batches"], 16);
}

#[test]
fn run_perf_reports_both_machines() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(
        run(d, &["run-perf", &program("gpt2_dense"), "--clusters", "8", "--trace"]),
        0
    );
    let t = json(d.join("taurus.json"));
    let x = json(d.join("xpu.json"));
    assert_eq!(t["bsk_macs"], x["bsk_macs"]);
    let rows = csv_rows(d.join("units.csv"));
    let bru_clusters: std::collections::BTreeSet<_> = rows
        .iter()
        .filter(|r| r[0] == "taurus" && r[1] == "bru")
        .map(|r| r[2].clone())
        .collect();
    assert_eq!(bru_clusters.len(), 8);
    assert!(rows.iter().any(|r| r[0] == "xpu"));
    assert!(!csv_rows(d.join("trace.csv")).is_empty());
}

#[test]
fn grouped_sync_raises_peak_bandwidth() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let p = program("gpt2_dense");
    assert_eq!(run(d, &["run-perf", &p, "--no-xpu"]), 0);
    let full = json(d.join("taurus.json"))["peak_bandwidth"].as_f64().unwrap();
    assert_eq!(run(d, &["run-perf", &p, "--no-xpu", "--sync", "grouped"]), 0);
    let grouped = json(d.join("taurus.json"))["peak_bandwidth"].as_f64().unwrap();
    assert!(grouped / full >= 1.7, "{grouped} vs {full}");
}

#[test]
fn sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(
        run(
            d,
            &[
                "sweep",
                &program("gpt2_dense"),
                "--kind",
                "clusters",
                "--range",
                "2:8:2"
            ]
        ),
        0
    );
    let rows = csv_rows(d.join("sweep_clusters.csv"));
    let values: Vec<_> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(values, ["2", "4", "6", "8"]);
    assert_eq!(
        run(d, &["sweep", &program("gpt2_dense"), "--kind", "rr", "--range", "3-5"]),
        2
    );
}

#[test]
fn ranges() {
    assert_eq!(parse_range("1:5:2").unwrap(), [1, 3, 5]);
    assert_eq!(parse_range("4:6").unwrap(), [4, 5, 6]);
    assert!(parse_range("6:4:1").is_err());
    assert!(parse_range("a:b:c").is_err());
}

#[test]
fn errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(run(d, &["dedup-report", "/nonexistent.json"]), 2);
    assert_eq!(run(d, &["--params", "nope", "keygen"]), 2);
    assert_eq!(run(d, &["frobnicate"]), 2);
    assert_eq!(run(d, &["run-perf", &program("gpt2_dense"), "--set", "clusters=0"]), 2);
    assert!(
        std::fs::read_dir(d).unwrap().next().is_none(),
        "failed commands write nothing"
    );
}
