use std::path::PathBuf;
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lendpool"))
        .args(args)
        .env("LENDPOOL_FIXTURES", fixtures())
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn error_line(o: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&o.stderr);
    let last = stderr.lines().last().expect("an error line");
    serde_json::from_str(last).unwrap_or_else(|e| panic!("{last:?} is not JSON: {e}"))
}

#[test]
fn replay_example_converges() {
    let o = run(&["replay-example"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 6);
    assert!(out.contains("6/6 traces converge to Γ3,1"), "{out}");
}

#[test]
fn estimate_params_by_asset_name() {
    let o = run(&["estimate-params", "eth"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!((v["mu"].as_f64().unwrap() + 0.012).abs() < 1e-6);
    assert!((v["sigma"].as_f64().unwrap() - 0.12).abs() < 1e-6);
    assert_eq!(v["closes"], 92);
}

#[test]
fn estimate_params_rejects_bad_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "date,close\n2020-01-01,1.0\n2020-01-02,-3\n").unwrap();
    let o = run(&["estimate-params", path.to_str().unwrap()]);
    assert!(!o.status.success());
    assert_eq!(error_line(&o)["error"], "input");
}

#[test]
fn simulate_writes_round_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rounds.csv");
    let o = run(&[
        "simulate",
        "--scenario",
        "eth-usdc",
        "--grid",
        "1.5:1.1",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(lendpool::scenario::ROUNDS_HEADER));
    assert_eq!(lines.count(), 92 * 10);
}

#[test]
fn sweep_honours_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = run(&[
        "sweep",
        "--scenario",
        "usdc-wbtc",
        "--grid",
        "1.3:1.1,1.4:1.2",
        "--max-sims",
        "12",
        "--delta",
        "0.2",
        "--alpha",
        "0.1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some(lendpool::stats::RESULTS_HEADER));
    assert_eq!(text.lines().count(), 1 + 2 * 10 * 92);
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(7) == Some("12")));
}

#[test]
fn config_file_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    let out = dir.path().join("r.csv");
    std::fs::write(
        &cfg,
        format!(
            "scenarios = [\"eth-wbtc\"]\nhorizon = 5\noutput = {:?}\n[grid]\npairs = [[1.5, 1.1]]\n[stats]\nn_min = 5\nn_max = 5\n[borrowers]\ncount = 3\n",
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let o = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 6);
    assert!(text.lines().nth(1).unwrap().starts_with("eth-wbtc,1.50000000,1.10000000,b01,0,"));
}

#[test]
fn failures_are_machine_readable() {
    let bad_grid = run(&["sweep", "--grid", "1.5-1.1"]);
    assert!(!bad_grid.status.success());
    assert_eq!(error_line(&bad_grid)["error"], "usage");

    let bad_scenario = run(&["simulate", "--scenario", "doge-usdc"]);
    assert!(!bad_scenario.status.success());
    assert_eq!(error_line(&bad_scenario)["error"], "config");

    let missing = run(&["sweep", "--config", "/nonexistent/exp.toml"]);
    assert!(!missing.status.success());
    let e = error_line(&missing);
    assert_eq!(e["error"], "config");
    assert!(e["message"].as_str().unwrap().contains("/nonexistent/exp.toml"));

    let unwritable = run(&["simulate", "--out", "/nonexistent/dir/x.csv"]);
    assert!(!unwritable.status.success());
    assert_eq!(error_line(&unwritable)["error"], "io");

    let degenerate = run(&["sweep", "--grid", "1.1:1.1"]);
    assert!(!degenerate.status.success());
    assert_eq!(error_line(&degenerate)["error"], "config");
}
