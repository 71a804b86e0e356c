use std::path::PathBuf;
use std::process::{Command, Output};

use qit_core::{build_schedule, reduction_eps, DenseState, ProductState};

fn qit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qit-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON on stdout")
}

#[test]
fn needle_identity_rejects() {
    let o = qit(&[
        "identity",
        "--n",
        "3",
        "--eps",
        "0.5",
        "--rho",
        "needle:ZZZ:0.5",
        "--sigma",
        "mixed",
        "--seed",
        "7",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o);
    assert_eq!(v["verdict"], "no");
    assert_eq!(v["triggering_pauli"], "ZZZ");
    assert_eq!(v["seed"], 7);
    assert_eq!(v["L"], 100);
    assert_eq!(v["rho"], "needle:ZZZ:0.5");
    assert!(v.get("wall_ms").is_none());
}

#[test]
fn needle_identity_batch_exit_code_is_majority() {
    let o = qit(&[
        "identity",
        "--n",
        "3",
        "--eps",
        "0.5",
        "--rho",
        "needle:ZZZ:0.5",
        "--sigma",
        "mixed",
        "--seed",
        "7",
        "--trials",
        "9",
    ]);
    let v = json(&o);
    let no = v["no"].as_u64().unwrap();
    assert!(no >= 6, "{no}");
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(v["reports"].as_array().unwrap().len(), 9);
}

#[test]
fn identical_qubits_accept() {
    let o = qit(&[
        "identity",
        "--rho",
        "product:0,0,1",
        "--sigma",
        "product:0,0,1",
        "--n",
        "1",
        "--eps",
        "0.9",
        "--seed",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["verdict"], "yes");
}

#[test]
fn schedule_matches_library() {
    let o = qit(&["schedule", "--n", "2", "--eps", "0.5", "--L", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let expected = build_schedule(16, reduction_eps(2, 0.5), 100, None).unwrap();
    assert_eq!(stdout(&o), expected.to_csv());
    assert!(stdout(&o).starts_with("k,num_indices,gap_sq,delta,N\n"));

    let raw = qit(&["schedule", "--m", "256", "--eps", "0.1", "--format", "json"]);
    let v = json(&raw);
    let expected = build_schedule(256, 0.1, 100, None).unwrap();
    assert_eq!(v["total_samples"], expected.total_samples());
    assert_eq!(v["schedule"]["rows"].as_array().unwrap().len(), 9);
}

#[test]
fn identical_runs_give_identical_files() {
    let (a, b) = (scratch("a.json"), scratch("b.json"));
    for path in [&a, &b] {
        let o = qit(&[
            "identity",
            "--n",
            "2",
            "--eps",
            "0.5",
            "--rho",
            "random-product:3",
            "--sigma",
            "random-product:3",
            "--seed",
            "11",
            "--trials",
            "3",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        assert!(o.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn missing_seed_is_recorded() {
    let o = qit(&[
        "identity", "--n", "1", "--eps", "1", "--rho", "mixed", "--sigma", "mixed",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(json(&o)["seed"].is_u64());
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["identity", "--bogus"],
        vec![
            "identity",
            "--eps",
            "0.5",
            "--rho",
            "needle:ZQ:0.5",
            "--sigma",
            "mixed",
        ],
        vec!["identity", "--eps=0", "--n", "1"],
        vec![
            "identity", "--eps", "0.5", "--rho", "mixed", "--sigma", "mixed",
        ],
        vec![
            "identity",
            "--eps",
            "0.5",
            "--rho",
            "needle:X:0.5",
            "--sigma",
            "needle:XX:0.5",
        ],
        vec!["identity", "--eps", "0.5", "--n", "1", "--trials", "0"],
        vec!["schedule", "--eps", "0.5"],
        vec![
            "mixedness",
            "--n",
            "2",
            "--eps",
            "0.5",
            "--shots",
            "1",
            "--trials",
            "50",
        ],
        vec![
            "collection",
            "--spec",
            "/nonexistent/spec.json",
            "--eps",
            "0.1",
        ],
        vec!["frobnicate"],
    ] {
        let o = qit(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn collection_spec_file() {
    let spec = scratch("far.json");
    std::fs::write(
        &spec,
        r#"{"alpha": [1.0, 0.2, 0.2, 0.2], "beta": [-1.0, 0.2, 0.2, 0.2]}"#,
    )
    .unwrap();
    let sched = scratch("far.csv");
    let o = qit(&[
        "collection",
        "--spec",
        spec.to_str().unwrap(),
        "--eps",
        "0.7",
        "--seed",
        "4",
        "--emit-schedule",
        sched.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o);
    assert_eq!(v["m"], 4);
    assert_eq!(v["runs"][0]["trigger_index"], 0);
    let csv = std::fs::read_to_string(&sched).unwrap();
    assert_eq!(csv, build_schedule(4, 0.7, 100, None).unwrap().to_csv());

    let same = scratch("same.json");
    std::fs::write(&same, r#"{"alpha": [0.5, -0.5], "beta": [0.5, -0.5]}"#).unwrap();
    let o = qit(&[
        "collection",
        "--spec",
        same.to_str().unwrap(),
        "--eps",
        "0.5",
        "--seed",
        "4",
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("trial,seed,verdict,total_samples"));
}

#[test]
fn dense_file_state() {
    let path = scratch("zero.json");
    let zero = ProductState::new(vec![[0.0, 0.0, 1.0]])
        .unwrap()
        .to_dense()
        .unwrap();
    std::fs::write(&path, zero.to_json()).unwrap();
    assert_eq!(DenseState::load_json(&path).unwrap(), zero);
    let rho = format!("dense:{}", path.display());
    let o = qit(&[
        "identity",
        "--eps",
        "1",
        "--rho",
        &rho,
        "--sigma",
        "product:0,0,-1",
        "--seed",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["rho"], rho.as_str());
}

#[test]
fn mixedness_sweep_csv() {
    let o = qit(&[
        "mixedness",
        "--n",
        "2",
        "--eps",
        "0.8",
        "--shots",
        "1,200",
        "--trials",
        "100",
        "--seed",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("n,eps,family,strategy,budget,trials,successes,advantage,ci_low,ci_high,seed")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("2,0.8,full,uniform-split,3000,100,"));
}

#[test]
fn calibrate_reports_smallest_l() {
    let o = qit(&[
        "calibrate",
        "--m",
        "4",
        "--eps",
        "0.5",
        "--L-grid",
        "1,100",
        "--trials",
        "30",
        "--seed",
        "8",
        "--format",
        "json",
    ]);
    let v = json(&o);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0]["rejection_concentrated"].is_number());
    match v["smallest_passing_L"].as_u64() {
        Some(_) => assert_eq!(o.status.code(), Some(0)),
        None => assert_eq!(o.status.code(), Some(1)),
    }
}

#[test]
fn selftest_passes() {
    let o = qit(&["selftest", "--seed", "1", "--pairs", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["passed"], true);
    assert_eq!(v["checks"].as_array().unwrap().len(), 7);
}

#[test]
fn help_exits_zero() {
    let o = qit(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("identity"));
}
