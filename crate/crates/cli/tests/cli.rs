use std::path::PathBuf;
use std::process::{Command, Output};

fn fasris(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fasris")).args(args).output().unwrap()
}

fn small_scenario() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios/small.toml")
        .display()
        .to_string()
}

#[test]
fn run_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("snr.csv");
    let scenario = small_scenario();
    let res = fasris(&[
        "run",
        "--scenario",
        &scenario,
        "--sweep",
        "snr_db",
        "--values",
        "0,10",
        "--schemes",
        "FAS-NOMA,TAS-OMA",
        "--trials",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "variable,value,scheme,mean_rsum,stderr_rsum,mean_rn,mean_rm,mean_eta,mean_iters,trials"
    );
    assert_eq!(lines.count(), 4);
}

#[test]
fn run_prints_to_stdout_without_out() {
    let scenario = small_scenario();
    let res = fasris(&[
        "run",
        "--scenario",
        &scenario,
        "--sweep",
        "W",
        "--values",
        "1",
        "--trials",
        "2",
    ]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(text.starts_with("variable,value,scheme"));
    assert!(text.contains("FAS-NOMA"));
}

#[test]
fn bad_input_exits_nonzero() {
    let scenario = small_scenario();
    let res = fasris(&[
        "run",
        "--scenario",
        &scenario,
        "--sweep",
        "W",
        "--values",
        "1",
        "--schemes",
        "FAS-SDMA",
    ]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("FAS-SDMA"));
    let res = fasris(&["run", "--preset", "fig9"]);
    assert!(!res.status.success());
    let res = fasris(&["solve", "--scenario", "/nonexistent/scenario.toml"]);
    assert!(!res.status.success());
}

#[test]
fn dumped_realization_replays() {
    let dir = tempfile::tempdir().unwrap();
    let arch = dir.path().join("trial.txt");
    let scenario = small_scenario();
    let res = fasris(&[
        "dump-realization",
        "--scenario",
        &scenario,
        "--trial",
        "2",
        "--out",
        arch.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    assert!(std::fs::read_to_string(&arch)
        .unwrap()
        .starts_with("fasris-realization 1\n"));

    let drawn = fasris(&["solve", "--scenario", &scenario, "--trial", "2"]);
    let replayed = fasris(&[
        "solve",
        "--scenario",
        &scenario,
        "--realization",
        arch.to_str().unwrap(),
    ]);
    assert!(drawn.status.success() && replayed.status.success());
    assert_eq!(drawn.stdout, replayed.stdout);
    let doc: serde_json::Value = serde_json::from_slice(&drawn.stdout).unwrap();
    assert!(doc["r_star"].as_f64().unwrap() > 0.0);

    // a different scenario hashes differently and is refused
    let other = fasris(&["solve", "--realization", arch.to_str().unwrap()]);
    assert!(!other.status.success());
}
