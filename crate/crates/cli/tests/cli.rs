use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use bb84_eve::probe::{PostInteraction, Strategy};
use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bb84-eve")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> (Output, Vec<u8>) {
    let path = dir.join(name);
    let mut full: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap().to_string();
    full.extend(["--out", &p]);
    let o = bin(&full);
    let bytes = fs::read(&path).unwrap_or_default();
    (o, bytes)
}

#[test]
fn tradeoff_csv() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["tradeoff", "--d-min", "0", "--d-max", "0.5", "--step", "0.01"];
    let (o, bytes) = run_to(dir.path(), "a.csv", &args);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("threshold d* = 0.146446609407"));
    let text = String::from_utf8(bytes.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "d,g_bound,i_eve_nats,i_eve_bits,i_ab_nats,s_chsh,secure");
    assert_eq!(lines.len(), 52);
    assert!(!text.contains('\r'));
    let row = lines.iter().find(|l| l.starts_with("0.15,")).unwrap();
    assert!(row.ends_with(",false"));
    let (_, again) = run_to(dir.path(), "b.csv", &args);
    assert_eq!(bytes, again);
}

#[test]
fn tradeoff_json_matches_csv_fields() {
    let dir = tempfile::tempdir().unwrap();
    let (o, bytes) = run_to(dir.path(), "t.json", &["tradeoff", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let rows: Vec<Value> = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(rows.len(), 51);
    let keys: Vec<&String> = rows[0].as_object().unwrap().keys().collect();
    for k in ["d", "g_bound", "i_eve_nats", "i_eve_bits", "i_ab_nats", "s_chsh", "secure"] {
        assert!(keys.iter().any(|x| *x == k), "{k}");
    }
}

#[test]
fn tradeoff_bad_range() {
    let o = bin(&["tradeoff", "--d-min", "0.3", "--d-max", "0.2"]);
    assert_eq!(code(&o), 2);
    assert!(!o.stderr.is_empty());
    assert_eq!(code(&bin(&["tradeoff", "--step", "-1"])), 2);
}

#[test]
fn simulate_no_attack() {
    let dir = tempfile::tempdir().unwrap();
    let (o, bytes) = run_to(dir.path(), "s.json", &["simulate", "--n", "10000", "--attack", "off"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(v["summary"]["bob_error_rate"], 0.0);
    assert!(v["summary"].get("eve_guess_accuracy").is_none());
    assert!(v["summary"].get("eve_mi_plugin_nats").is_none());
}

#[test]
fn simulate_attack_statistics_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--d", "0.1", "--n", "1000000", "--seed", "5", "--workers", "2"];
    let (o, bytes) = run_to(dir.path(), "a.json", &args);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&bytes).unwrap();
    let s = &v["summary"];
    assert!((s["bob_error_rate"].as_f64().unwrap() - 0.1).abs() < 0.0013);
    assert!((s["eve_guess_accuracy"].as_f64().unwrap() - 0.8).abs() < 0.002);
    assert!(v.get("wall_time_s").is_none());
    let (_, again) = run_to(dir.path(), "b.json", &args);
    assert_eq!(bytes, again);

    let (_, timed) = run_to(dir.path(), "c.json", &[&args[..], &["--timing"]].concat());
    let v: Value = serde_json::from_slice(&timed).unwrap();
    assert!(v["wall_time_s"].as_f64().is_some());
}

#[test]
fn simulate_bad_flags() {
    assert_eq!(code(&bin(&["simulate", "--d", "0.7"])), 2);
    assert_eq!(code(&bin(&["simulate", "--n", "0"])), 2);
    assert_eq!(code(&bin(&["simulate", "--attack", "maybe"])), 2);
}

#[test]
fn optimize_reports_gap() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["optimize", "--probe-dim", "2", "--d", "0.1", "--restarts", "2", "--seed", "1"];
    let (o, bytes) = run_to(dir.path(), "o.json", &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&bytes).unwrap();
    assert!(v["gap_to_bound"].as_f64().unwrap().abs() < 1e-3);
    assert_eq!(v["converged"], true);
    let (_, again) = run_to(dir.path(), "p.json", &args);
    assert_eq!(bytes, again);
}

#[test]
fn optimize_exit_codes() {
    assert_eq!(code(&bin(&["optimize", "--probe-dim", "3"])), 2);
    assert_eq!(code(&bin(&["optimize", "--d", "0.9", "--probe-dim", "2"])), 2);
    let o = bin(&["optimize", "--probe-dim", "2", "--restarts", "1", "--max-iters", "5"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn verify_suites() {
    let o = bin(&["verify", "--suite", "equality"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("ε = [1, 1, -1, -1]"));
    let o = bin(&["verify", "--suite", "bounds"]);
    let text = String::from_utf8_lossy(&o.stdout).to_string();
    assert_eq!(code(&o), 0);
    assert!(text.contains("PASS  bounds    concavity") && text.contains("threshold"));
    assert_eq!(code(&bin(&["verify", "--suite", "all"])), 0);
    assert_eq!(code(&bin(&["verify", "--suite", "everything"])), 2);
}

#[test]
fn strategy_dump_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for (i, (dxy, duv)) in [("0", "0"), ("0.1", "0.1"), ("0.2", "0.1")].into_iter().enumerate() {
        let (o, bytes) = run_to(dir.path(), &format!("s{i}.json"), &["strategy-dump", "--dxy", dxy, "--duv", duv]);
        assert_eq!(code(&o), 0);
        let text = String::from_utf8(bytes).unwrap();
        let back = Strategy::from_json(&text).unwrap();
        assert_eq!(back.to_json(), text.trim_end());
        assert_eq!(back.probe_dim(), 4);
    }
    assert_eq!(code(&bin(&["strategy-dump", "--dxy", "0.6", "--duv", "0.1"])), 2);
}

#[test]
fn no_subcommand_is_usage_error() {
    assert_eq!(code(&bin(&[])), 2);
}
