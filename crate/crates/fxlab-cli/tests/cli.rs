//! End-to-end checks of the `fxlab` binary: subcommand output, exit codes,
//! determinism.

use std::path::Path;
use std::process::{Command, Output};

fn fxlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fxlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn json(output: &Output) -> serde_json::Value {
    serde_json::from_str(stdout(output).trim()).expect("stdout is JSON")
}

#[test]
fn help_and_version_exit_zero() {
    assert!(fxlab(&["--help"]).status.success());
    assert!(fxlab(&["--version"]).status.success());
    assert!(fxlab(&["exact", "--help"]).status.success());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(fxlab(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(fxlab(&["exact"]).status.code(), Some(1)); // no graph
    assert_eq!(
        fxlab(&["exact", "--gen", "cycle(4)", "--active", "zzz"]).status.code(),
        Some(1)
    );
    assert_eq!(
        fxlab(&["select", "--gen", "cycle(4)", "--heuristic", "celf", "-k", "1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        fxlab(&["weak-select", "--gen", "cycle(4)", "-k", "1.5"]).status.code(),
        Some(1)
    );
}

#[test]
fn runtime_errors_exit_two() {
    // Exceeds the exact-solver size cap.
    let out = fxlab(&["exact", "--gen", "cycle(20)", "--delta", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    // Strong selection refuses directed graphs.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tri.edges");
    std::fs::write(&path, "a b 1\nb c 1\nc a 1\n").unwrap();
    let out = fxlab(&[
        "strong",
        "--graph",
        path.to_str().unwrap(),
        "--directed",
        "--weighted",
        "--active",
        "a",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_thread_env_exits_one() {
    let out = Command::new(env!("CARGO_BIN_EXE_fxlab"))
        .args(["exact", "--gen", "complete(3)"])
        .env("FXLAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn exact_golden_value_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k4.edges");
    std::fs::write(&path, "0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n").unwrap();
    let out = fxlab(&[
        "exact",
        "--graph",
        path.to_str().unwrap(),
        "--active",
        "0,1",
        "--delta",
        "0.3333333333333333",
    ]);
    assert!(out.status.success());
    let value = json(&out);
    let avg = value["average"].as_f64().unwrap();
    assert!((avg - 28984.0 / 94153.0).abs() < 1e-9, "avg {avg}");
    assert_eq!(value["per_start"].as_object().unwrap().len(), 4);
}

#[test]
fn weak_select_matches_documented_output() {
    let out = fxlab(&["weak-select", "--gen", "star(4)", "-k", "1"]);
    assert!(out.status.success());
    assert_eq!(
        stdout(&out).trim(),
        r#"{"chosen":["0"],"objective":0.225}"#
    );
    // Fractional budget: 0.5 of n=4 is k=2.
    let out = fxlab(&["weak-select", "--gen", "star(4)", "-k", "0.5"]);
    assert_eq!(json(&out)["chosen"].as_array().unwrap().len(), 2);
}

#[test]
fn strong_exact_on_c4_cover() {
    let out = fxlab(&["strong", "--gen", "cycle(4)", "--active", "0,2"]);
    let value = json(&out);
    assert_eq!(value["method"], "exact");
    assert_eq!(value["average"].as_f64().unwrap(), 0.75);

    let out = fxlab(&[
        "strong", "--gen", "cycle(4)", "--active", "0,2", "--method", "mc",
        "--trials", "20000", "--seed", "5",
    ]);
    let value = json(&out);
    assert_eq!(value["method"], "monte-carlo");
    let mean = value["mean"].as_f64().unwrap();
    assert!((mean - 0.75).abs() < 0.02, "mean {mean}");
}

#[test]
fn simulate_is_seed_deterministic() {
    let args = [
        "simulate", "--gen", "complete(4)", "--active", "0,1", "--delta", "1",
        "--trials", "5000", "--seed", "7",
    ];
    let a = stdout(&fxlab(&args));
    let b = stdout(&fxlab(&args));
    assert_eq!(a, b);
    let c = stdout(&fxlab(&[
        "simulate", "--gen", "complete(4)", "--active", "0,1", "--delta", "1",
        "--trials", "5000", "--seed", "8",
    ]));
    assert_ne!(a, c);
}

#[test]
fn simulate_epsilon_picks_hoeffding_trials() {
    let out = fxlab(&[
        "simulate", "--gen", "complete(2)", "--delta", "0", "--epsilon", "0.05",
        "--seed", "1",
    ]);
    let value = json(&out);
    // ceil(ln(2/0.05) / (2 * 0.05^2)) = 738
    assert_eq!(value["trials"].as_u64().unwrap(), 738);
}

#[test]
fn select_heuristics() {
    let out = fxlab(&["select", "--gen", "cycle(4)", "--heuristic", "vertex-cover", "-k", "2"]);
    let value = json(&out);
    assert_eq!(value["heuristic"], "vertex-cover");
    assert_eq!(value["chosen"], serde_json::json!(["0", "2"]));

    let out = fxlab(&["select", "--gen", "star(6)", "--heuristic", "temperature", "-k", "1"]);
    assert_eq!(json(&out)["chosen"], serde_json::json!(["0"]));

    let args = ["select", "--gen", "cycle(8)", "--heuristic", "random", "-k", "3", "--seed", "42"];
    assert_eq!(stdout(&fxlab(&args)), stdout(&fxlab(&args)));

    let out = fxlab(&[
        "select", "--gen", "cycle(4)", "--heuristic", "lazy-greedy", "-k", "2",
        "--regime", "strong",
    ]);
    let value = json(&out);
    let chosen = value["chosen"].as_array().unwrap();
    assert_eq!(chosen.len(), 2);
    assert!(value["oracle_evals"].as_u64().unwrap() >= 5);
}

#[test]
fn experiment_writes_csv_and_json(){
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.json");
    std::fs::write(
        &config,
        r#"{
            "graphs": [{"gen": "cycle(6)"}],
            "budgets": {"ks": [2]},
            "regime": "strong",
            "trials": 1000,
            "seed": 3
        }"#,
    )
    .unwrap();
    let csv_path = dir.path().join("report.csv");
    let out = fxlab(&[
        "experiment", "--config", config.to_str().unwrap(), "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with(
        "graph_id,n,k,heuristic,chosen,raw_score,stderr,normalized_score,seed,trials\n"
    ));
    assert_eq!(csv.lines().count(), 8); // header + 7 heuristics

    let json_path = dir.path().join("report.json");
    let out = fxlab(&[
        "experiment", "--config", config.to_str().unwrap(), "--out",
        json_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let rows: Vec<serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(rows.len(), 7);

    // Timings column is opt-in.
    let timed_path = dir.path().join("timed.csv");
    let out = fxlab(&[
        "experiment", "--config", config.to_str().unwrap(), "--out",
        timed_path.to_str().unwrap(), "--timings",
    ]);
    assert!(out.status.success());
    let timed = std::fs::read_to_string(&timed_path).unwrap();
    assert!(timed.lines().next().unwrap().ends_with(",wall_ms"));
}

#[test]
fn experiment_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(&config, r#"{"graphs": [], "regime": "strong", "seed": 1"#).unwrap();
    assert_eq!(
        fxlab(&["experiment", "--config", config.to_str().unwrap()]).status.code(),
        Some(1)
    );
    assert_eq!(
        fxlab(&["experiment", "--config", Path::new("/no/such/file.json").to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}
