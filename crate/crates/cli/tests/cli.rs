use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn stabgnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stabgnn")).args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let out = stabgnn(args);
    assert!(out.status.success(), "{args:?}\n{}", String::from_utf8_lossy(&out.stderr));
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const TINY_MODEL: [&str; 8] = ["--tc-dims", "4,4,4", "--global-dims", "8,4", "--head-dims", "8,4", "--epochs", "2"];

#[test]
fn gen_train_eval_curve_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("ps.jsonl");
    ok(&["gen", "--family", "PS", "--min-qubits", "1", "--max-qubits", "3", "--per-cell", "8", "--seed", "5", "--out", p(&data)]);
    let manifest = read_json(&dir.path().join("ps.manifest.json"));
    assert_eq!(manifest["total"], 48);

    let run = dir.path().join("run");
    let mut args = vec!["train", "--dataset", p(&data), "--task", "stab", "--seed", "1", "--stratify", "--out", p(&run)];
    args.extend(TINY_MODEL);
    ok(&args);
    for f in ["model.ckpt", "metrics.csv", "history.csv", "predictions_train.csv", "predictions_test.csv", "manifest.json"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let metrics = std::fs::read_to_string(run.join("metrics.csv")).unwrap();
    assert!(metrics.lines().next().unwrap().starts_with("dataset,task,n,accuracy"));
    assert!(metrics.contains("baseline_test"));
    let preds = std::fs::read_to_string(run.join("predictions_test.csv")).unwrap();
    assert!(preds.starts_with("id,label,prediction"));

    let cs = dir.path().join("cs.jsonl");
    ok(&["gen", "--family", "CS", "--min-qubits", "1", "--max-qubits", "3", "--per-cell", "2", "--seed", "6", "--out", p(&cs)]);
    let ev = dir.path().join("eval");
    ok(&["eval", "--checkpoint", p(&run.join("model.ckpt")), "--dataset", p(&cs), "--out", p(&ev)]);
    assert_eq!(read_json(&ev.join("manifest.json"))["result"]["n"], 300);

    let curve = dir.path().join("curve");
    ok(&["curve", "--kind", "clifford-depth", "--checkpoint", p(&run.join("model.ckpt")), "--dataset", p(&cs), "--out", p(&curve)]);
    let rows = std::fs::read_to_string(curve.join("curve.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 25 * 2);
    assert!(curve.join("curve.dat").exists());

    let bins = dir.path().join("bins");
    ok(&["curve", "--kind", "m2-bins", "--density", "--checkpoint", p(&run.join("model.ckpt")), "--dataset", p(&cs), "--out", p(&bins)]);
    assert_eq!(std::fs::read_to_string(bins.join("curve.csv")).unwrap().lines().count(), 31);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("rqc.jsonl");
    let cfg = dir.path().join("gen.toml");
    std::fs::write(&cfg, format!("family = \"RQC\"\nper_cell = 3\nmax_qubits = 3\nrqc_gates = [0, 10]\nout = \"{}\"\n", p(&data))).unwrap();
    ok(&["gen", "--config", p(&cfg), "--per-cell", "2"]);
    assert_eq!(read_json(&dir.path().join("rqc.manifest.json"))["total"], 4);

    let run_cfg = dir.path().join("run.json");
    std::fs::write(
        &run_cfg,
        format!(r#"{{"dataset": "{}", "task": "sre-reg", "train": {{"epochs": 50, "seed": 3}}, "model": {{"tc_dims": [4, 4, 4], "global_dims": [8, 4], "head_dims": [8, 4]}}}}"#, p(&data)),
    )
    .unwrap();
    let run = dir.path().join("run");
    ok(&["train", "--config", p(&run_cfg), "--epochs", "1", "--out", p(&run)]);
    let m = read_json(&run.join("manifest.json"));
    assert_eq!(m["settings"]["train"]["epochs"], 1);
    assert_eq!(m["settings"]["train"]["seed"], 3);
}

#[test]
fn repeat_and_ablate_write_their_reports() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("rqc.jsonl");
    ok(&["gen", "--family", "RQC", "--max-qubits", "4", "--per-cell", "10", "--seed", "2", "--out", p(&data)]);

    let rep = dir.path().join("rep");
    let mut args = vec!["repeat", "--dataset", p(&data), "--task", "sre-reg", "-n", "3", "--out", p(&rep)];
    args.extend(TINY_MODEL);
    ok(&args);
    let csv = std::fs::read_to_string(rep.join("repeat.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 + 1);
    assert!(rep.join("run2/metrics.csv").exists());

    let abl = dir.path().join("abl");
    let mut args = vec![
        "ablate", "--dataset", p(&data), "--split", "extrapolation", "--axis", "qubits", "--train-range", "2:3", "--test-range", "4:4",
        "--out", p(&abl),
    ];
    args.extend(TINY_MODEL);
    ok(&args);
    let csv = std::fs::read_to_string(abl.join("ablation.csv")).unwrap();
    assert!(csv.starts_with("dataset,variant,train_mse,test_mse,extrapolation_mse"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn encode_writes_a_reusable_graph_cache() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("tim.jsonl");
    ok(&["gen", "--family", "TIM", "--max-qubits", "3", "--per-cell", "6", "--out", p(&data)]);
    let cache = dir.path().join("graphs.bin");
    ok(&["encode", "--dataset", p(&data), "--d-q", "5", "--out", p(&cache)]);
    assert_eq!(read_json(&dir.path().join("graphs.manifest.json"))["result"]["node_dim"], 12);
    let run = dir.path().join("run");
    let mut args = vec!["train", "--dataset", p(&data), "--graphs", p(&cache), "--task", "sre-reg", "--out", p(&run)];
    args.extend(TINY_MODEL);
    ok(&args);
}

#[test]
fn bad_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing_family = stabgnn(&["gen", "--out", p(&dir.path().join("x.jsonl"))]);
    assert_eq!(missing_family.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing_family.stderr).contains("family"));

    let cfg = dir.path().join("gen.yaml");
    std::fs::write(&cfg, "family: PS").unwrap();
    assert_eq!(stabgnn(&["gen", "--config", p(&cfg)]).status.code(), Some(2));

    assert_eq!(stabgnn(&["gen", "--family", "XYZ"]).status.code(), Some(2));

    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{not json}\n").unwrap();
    let out = stabgnn(&["train", "--dataset", p(&bad), "--task", "stab", "--out", p(&dir.path().join("r"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = stabgnn(&["eval", "--checkpoint", p(&dir.path().join("none.ckpt")), "--dataset", p(&dir.path().join("none.jsonl")), "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(3));

    let data = dir.path().join("rqc.jsonl");
    ok(&["gen", "--family", "RQC", "--max-qubits", "3", "--per-cell", "10", "--out", p(&data)]);
    let run = dir.path().join("r");
    let mut args = vec!["train", "--dataset", p(&data), "--task", "sre-reg", "--lr", "1e300", "--out", p(&run)];
    args.extend(TINY_MODEL);
    assert_eq!(stabgnn(&args).status.code(), Some(3));
}

#[test]
fn sequential_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("rqc.jsonl");
    ok(&["gen", "--family", "RQC", "--max-qubits", "4", "--per-cell", "10", "--seed", "8", "--out", p(&data)]);
    let again = dir.path().join("again.jsonl");
    ok(&["gen", "--family", "RQC", "--max-qubits", "4", "--per-cell", "10", "--seed", "8", "--sequential", "--out", p(&again)]);
    assert_eq!(std::fs::read(&data).unwrap(), std::fs::read(&again).unwrap());

    let mut csvs = Vec::new();
    for name in ["a", "b"] {
        let run = dir.path().join(name);
        let mut args = vec!["train", "--sequential", "--dataset", p(&data), "--task", "sre-reg", "--seed", "4", "--out", p(&run)];
        args.extend(TINY_MODEL);
        ok(&args);
        csvs.push(std::fs::read(run.join("metrics.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}
