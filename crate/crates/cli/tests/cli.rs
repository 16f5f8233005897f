use std::fs;
use std::process::{Command, Output};

fn qrobust(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrobust")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn recover_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = qrobust(&["recover", "--n", "64", "--trials", "20", "--seed", "42", "--out", out, "--assert"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("trials.csv")).unwrap();
    assert_eq!(csv.lines().count(), 21);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["points"][0]["totals"]["trials"], 20);
}

#[test]
fn results_do_not_depend_on_workers() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, w) in [(&a, "1"), (&b, "3")] {
        let o = qrobust(&["recover", "--n", "32,64", "--trials", "10", "--seed", "7", "--workers", w, "--out", dir.path().to_str().unwrap()]);
        assert!(o.status.success());
    }
    let read = |d: &tempfile::TempDir| fs::read_to_string(d.path().join("trials.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn config_file_is_read_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, "kind = \"recover\"\nn = [16, 32, 64]\ntrials = 5\nseed = 1\nslope_range = [0.9, 1.1]\n").unwrap();
    let o = qrobust(&["symmetric", "--config", cfg.to_str().unwrap(), "--function", "or", "--random-weight", "--assert"]);
    let text = stdout(&o);
    // the subcommand wins over the kind in the file, and OR cost grows like sqrt(n)
    assert!(text.contains("cost exponent vs n"), "{text}");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn degree_of_parity() {
    let o = qrobust(&["degree", "--function", "parity", "--n", "3", "--epsilon", "1/3"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("degree = 3"));
}

#[test]
fn vertex_check_failure_exits_2_only_with_assert() {
    let args = ["check-poly", "--function", "parity", "--n", "2", "--exact", "--eps", "1/3"];
    let o = qrobust(&args);
    assert!(o.status.success());
    assert!(stdout(&o).contains("worst_violation = 1/9"));
    let mut with = args.to_vec();
    with.push("--assert");
    assert_eq!(qrobust(&with).status.code(), Some(2));
}

#[test]
fn lp_witness_passes_vertex_check() {
    let o = qrobust(&[
        "check-poly", "--function", "parity", "--n", "2", "--poly", "-3/10; 8/5 * x0; 8/5 * x1; -16/5 * x0*x1", "--eps", "1/4", "--assert",
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("verdict = PASS"));
}

#[test]
fn robust_find_backends() {
    for backend in ["contract", "statevector"] {
        let o = qrobust(&["robust-find", "--backend", backend, "--trials", "100", "--seed", "3", "--assert"]);
        assert!(o.status.success(), "{backend}: {}", String::from_utf8_lossy(&o.stderr));
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(v[0]["backend"], backend);
    }
}

#[test]
fn statevector_validate_passes() {
    let o = qrobust(&["statevector-validate", "--shots", "2000", "--seed", "5", "--tolerance", "0.05", "--assert"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("noiseless success probability: 0.945312"));
}

#[test]
fn baseline_and_direct_sum_run() {
    let o = qrobust(&["baseline", "--n", "64", "--eps", "0.1", "--trials", "20", "--assert"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("1280.0"));
    let o = qrobust(&["direct-sum", "--n", "16", "--trials", "5", "--assert"]);
    assert!(o.status.success());
}

#[test]
fn usage_and_input_errors_exit_1() {
    assert_eq!(qrobust(&["recover", "--bogus"]).status.code(), Some(1));
    assert_eq!(qrobust(&["recover", "--n", "64", "--eps", "0.2"]).status.code(), Some(1));
    assert_eq!(qrobust(&["degree", "--function", "nope", "--n", "2"]).status.code(), Some(1));
}
