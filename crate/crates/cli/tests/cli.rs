use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lottery-mfe"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let o = run(args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn error_line(o: &Output) -> Value {
    let err = String::from_utf8_lossy(&o.stderr);
    let first = err.lines().next().expect("stderr has an error line");
    serde_json::from_str(first).unwrap_or_else(|_| panic!("not JSON: {first}"))
}

fn json(p: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn write_synthetic_data(dir: &Path) {
    let mut amb = String::from("timestamp,celsius\n");
    for h in 0..48 {
        let c = 30.0 - 6.0 * (2.0 * std::f64::consts::PI * ((h % 24) as f64 + 7.0) / 24.0).cos();
        amb += &format!("2013-07-{:02}T{:02}:00:00,{c:.2}\n", 1 + h / 24, h % 24);
    }
    fs::write(dir.join("ambient.csv"), amb).unwrap();
    let mut pr = String::from("date,period_index,usd_per_mwh\n");
    for d in 1..=2 {
        for (j, p) in [47.0, 55.0, 78.0, 99.6, 66.5, 49.5].iter().enumerate() {
            pr += &format!("2013-07-0{d},{j},{p}\n");
        }
    }
    fs::write(dir.join("prices.csv"), pr).unwrap();
}

#[test]
fn empty_config_matches_no_config() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("empty.json");
    fs::write(&cfg, "{}").unwrap();
    let a = d.path().join("a");
    let b = d.path().join("b");
    ok(&["solve-mfe", "--out-dir", s(&a)]);
    ok(&["solve-mfe", "--config", s(&cfg), "--out-dir", s(&b)]);
    assert_eq!(fs::read(a.join("mfe_result.json")).unwrap(), fs::read(b.join("mfe_result.json")).unwrap());
    let r = json(a.join("mfe_result.json"));
    assert_eq!(r["win_gain"].as_f64().unwrap(), 14.7);
    assert_eq!(r["rho_star"].as_array().unwrap().len(), 6);
    assert_eq!(r["grid"]["x_min"].as_f64().unwrap(), -60.0);
}

#[test]
fn beta_out_of_range_is_a_validation_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.json");
    fs::write(&cfg, r#"{"beta": 1.5}"#).unwrap();
    let out = d.path().join("out");
    let o = run(&["solve-mfe", "--config", s(&cfg), "--out-dir", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let e = error_line(&o);
    assert_eq!(e["error"], "validation");
    assert_eq!(e["field"], "beta");
    assert!(!out.exists());
}

#[test]
fn unknown_keys_are_rejected() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.json");
    fs::write(&cfg, r#"{"lottery": {"prize": 15, "jackpot": 3}}"#).unwrap();
    let o = run(&["validate", "--config", s(&cfg), "--out-dir", s(&d.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    let e = error_line(&o);
    assert_eq!(e["error"], "parse");
    assert!(e["message"].as_str().unwrap().contains("jackpot"));
}

#[test]
fn nested_fields_are_named_by_path() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.json");
    fs::write(&cfg, r#"{"thermal": {"dt": 120}}"#).unwrap();
    let o = run(&["simulate-home", "--config", s(&cfg), "--constant-ambient", "30", "--out-dir", s(&d.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_line(&o)["field"], "thermal.dt");
}

#[test]
fn saved_config_round_trips() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"weighting": "normalized", "cost_scale": 1, "lottery": {"prize": 20},
            "solver": {"method": "exact"}, "thermal": {"interpolation": "linear"}}"#,
    )
    .unwrap();
    let a = d.path().join("a");
    let b = d.path().join("b");
    ok(&["simulate-home", "--config", s(&cfg), "--constant-ambient", "28", "--seed", "9", "--out-dir", s(&a)]);
    let saved = a.join("config.json");
    ok(&["simulate-home", "--config", s(&saved), "--constant-ambient", "28", "--out-dir", s(&b)]);
    assert_eq!(fs::read(&saved).unwrap(), fs::read(b.join("config.json")).unwrap());
    assert_eq!(fs::read(a.join("trace.csv")).unwrap(), fs::read(b.join("trace.csv")).unwrap());
    let c = json(saved);
    assert_eq!(c["seed"], 9);
    assert_eq!(c["weighting"], "normalized");
}

#[test]
fn lottery_sweep_writes_nineteen_rows() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("s");
    ok(&["sweep", "--scheme", "lottery", "--rewards", "5:95:5", "--out-dir", s(&out)]);
    let text = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# config_sha256="));
    assert_eq!(lines[1], "reward,scheme,savings,profit,expected_value,lsw,rho_1,rho_2,rho_3,rho_4,rho_5,rho_6");
    assert_eq!(lines.len(), 2 + 19);
    for (i, row) in lines[2..].iter().enumerate() {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f.len(), 12);
        assert_eq!(f[0].parse::<f64>().unwrap(), 5.0 * (i + 1) as f64);
        assert_eq!(f[1], "lottery");
        let rho: f64 = f[6..].iter().map(|x| x.parse::<f64>().unwrap()).sum();
        assert!((rho - 1.0).abs() < 1e-6);
    }
    let summary = json(out.join("sweep_summary.json"));
    assert_eq!(summary["points"], 19);
}

#[test]
fn outputs_are_deterministic_across_thread_counts() {
    let d = tempfile::tempdir().unwrap();
    let a = d.path().join("a");
    let b = d.path().join("b");
    let args = |o: &Path, t: &'static str| {
        vec!["sweep".to_string(), "--scheme".into(), "lottery".into(), "--rewards".into(), "10,15,40".into(),
             "--threads".into(), t.into(), "--out-dir".into(), s(o).into()]
    };
    let run_with = |v: Vec<String>| ok(&v.iter().map(String::as_str).collect::<Vec<_>>());
    run_with(args(&a, "1"));
    run_with(args(&b, "3"));
    for f in ["sweep.csv", "sweep_summary.json", "config.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn every_output_carries_the_config_hash() {
    let d = tempfile::tempdir().unwrap();
    write_synthetic_data(d.path());
    let cfg = d.path().join("c.json");
    fs::write(&cfg, r#"{"data": {"ambient_csv": "ambient.csv", "prices_csv": "prices.csv"}}"#).unwrap();
    let out = d.path().join("o");
    let c = s(&cfg);
    let o = s(&out);
    ok(&["solve-mfe", "--config", c, "--out-dir", o]);
    ok(&["benchmark", "--percent", "22", "--config", c, "--out-dir", o]);
    ok(&["simulate-home", "--action", "3", "--config", c, "--out-dir", o]);
    ok(&["build-action-table", "--config", c, "--out-dir", o]);
    ok(&["validate", "--config", c, "--out-dir", o]);

    let hash = json(out.join("mfe_result.json"))["config_hash"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);
    for entry in fs::read_dir(&out).unwrap() {
        let p = entry.unwrap().path();
        let name = p.file_name().unwrap().to_str().unwrap().to_string();
        match p.extension().and_then(|e| e.to_str()) {
            Some("csv") => {
                let first = fs::read_to_string(&p).unwrap().lines().next().unwrap().to_string();
                assert_eq!(first, format!("# config_sha256={hash}"), "{name}");
            }
            Some("json") if name != "config.json" => assert_eq!(json(p)["config_hash"], hash.as_str(), "{name}"),
            _ => {}
        }
    }
}

#[test]
fn simulate_home_trace_schema() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("h");
    ok(&["simulate-home", "--constant-ambient", "32.5", "--days", "2", "--out-dir", s(&out)]);
    let text = fs::read_to_string(out.join("trace.csv")).unwrap();
    let mut lines = text.lines().skip(1);
    assert_eq!(lines.next(), Some("t_seconds,tau,q"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 2 * 86_400 / 10);
    assert_eq!(rows[1][0] - rows[0][0], 10.0);
    assert!(rows.iter().all(|r| r[2] == 0.0 || r[2] == 1.0));
    let summary = json(out.join("home_summary.json"));
    let duty = summary["duty_cycle"].as_f64().unwrap();
    assert!((duty - 10.0 / 34.0).abs() < 0.05 * 10.0 / 34.0, "{duty}");
}

#[test]
fn built_table_feeds_back_as_actions_file() {
    let d = tempfile::tempdir().unwrap();
    write_synthetic_data(d.path());
    let cfg = d.path().join("c.json");
    fs::write(&cfg, r#"{"data": {"ambient_csv": "ambient.csv", "prices_csv": "prices.csv"}}"#).unwrap();
    let out = d.path().join("t");
    ok(&["build-action-table", "--config", s(&cfg), "--out-dir", s(&out)]);
    let table = json(out.join("action_table.json"));
    assert_eq!(table["actions"].as_array().unwrap().len(), 6);
    assert_eq!(table["actions"][0]["cost_cents"].as_f64().unwrap(), 0.0);

    let cfg2 = d.path().join("c2.json");
    fs::write(&cfg2, r#"{"actions_file": "t/action_table.json"}"#).unwrap();
    ok(&["simulate-home", "--action", "1", "--constant-ambient", "30", "--config", s(&cfg2), "--out-dir", s(&d.path().join("h"))]);
}

#[test]
fn benchmark_hits_the_payout_target() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("b");
    ok(&["benchmark", "--reward", "15", "--out-dir", s(&out)]);
    let r = json(out.join("benchmark_result.json"));
    assert!((r["paid"].as_f64().unwrap() - 15.0).abs() < 0.01);
    let profit = r["profit"].as_f64().unwrap();
    let savings = r["savings"].as_f64().unwrap();
    assert!((savings - r["paid"].as_f64().unwrap() - profit).abs() < 1e-9);
}

#[test]
fn usage_and_runtime_errors_are_machine_readable() {
    let o = run(&["sweep", "--scheme", "lottery", "--rewards", "5:x:5", "--out-dir", "/nonexistent/never"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_line(&o)["error"], "runtime");

    let o = run(&["sweep", "--scheme", "raffle", "--rewards", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_line(&o)["error"], "usage");

    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.json");
    fs::write(&cfg, r#"{"data": {"ambient_csv": "missing.csv"}}"#).unwrap();
    let o = run(&["validate", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_line(&o)["field"], "data.ambient_csv");
}

#[test]
fn measured_ambient_dataset_when_available() {
    let Ok(path) = std::env::var("LOTTERY_MFE_AMBIENT_CSV") else {
        eprintln!("LOTTERY_MFE_AMBIENT_CSV not set; skipping");
        return;
    };
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.json");
    fs::write(&cfg, serde_json::json!({"data": {"ambient_csv": path}}).to_string()).unwrap();
    let out = d.path().join("h");
    ok(&["simulate-home", "--config", s(&cfg), "--out-dir", s(&out)]);
    let kwh = json(out.join("home_summary.json"))["mean_daily_kwh"].as_f64().unwrap();
    assert!(kwh > 0.0);
}
