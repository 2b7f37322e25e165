use std::fs;
use std::process::Command;

fn bmstab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bmstab"))
}

fn json_of(out: &std::process::Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

#[test]
fn lambdabound_report() {
    let out = bmstab().args(["lemma", "lambdabound", "--n", "4", "--samples", "20000", "--seed", "7"]).output().unwrap();
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["lemma"], "lambdabound");
    assert_eq!(v["samples"], 20000);
    assert_eq!(v["violations"], 0);
    assert_eq!(v["params"]["n_max"], 4);
}

#[test]
fn negative_control_exits_nonzero() {
    let out = bmstab().args(["lemma", "lambdabound", "--samples", "20000", "--alpha", "1"]).output().unwrap();
    assert!(!out.status.success());
    assert!(json_of(&out)["violations"].as_u64().unwrap() > 0);
}

#[test]
fn ray_and_prob_reports() {
    let out = bmstab().args(["lemma", "ray", "--instances", "6", "--samples", "10"]).output().unwrap();
    assert!(out.status.success());
    assert_eq!(json_of(&out)["samples"], 60);
    let out = bmstab().args(["lemma", "prob", "--ell", "3", "--trials", "2000", "--points", "3"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["lemma"], "prob");
    assert!(v["worst_slack"].as_f64().unwrap() > 0.0);
}

#[test]
fn experiment_run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(
        &config,
        r#"{"scenarios": [
            {"family": "sheared-polytope", "dim": 2, "t": 0.5, "perturbation": 0.1, "h": 0.05, "seed": 1},
            {"family": "interval-union-1d", "dim": 2, "t": 0.5, "perturbation": 0.1, "h": 0.05, "seed": 2}
        ]}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let run = |threads: &str| {
        bmstab()
            .args(["experiment", "run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out_dir)
            .args(["--seed", "3", "--threads", threads])
            .output()
            .unwrap()
    };
    let out = run("2");
    // the interval family is one-dimensional, so its row fails and the exit code says so
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.contains("failed"));
    assert!(out_dir.join("report.json").exists());
    assert!(out_dir.join("plots/manifest.json").exists());
    let first = fs::read(out_dir.join("report.json")).unwrap();
    run("1");
    assert_eq!(fs::read(out_dir.join("report.json")).unwrap(), first, "thread count changed the report");
}

#[test]
fn clean_experiment_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    fs::write(
        &config,
        r#"{"scenarios": [{"family": "ellipsoid-pair", "dim": 2, "t": 0.5, "perturbation": 0.05, "h": 0.05}]}"#,
    )
    .unwrap();
    let out = bmstab()
        .args(["experiment", "run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    fs::write(&config, "{not json").unwrap();
    let out = bmstab()
        .args(["experiment", "run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
