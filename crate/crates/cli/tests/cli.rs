use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use battsite::cases::three_bus;
use battsite::lp::{read_mps, solve_lp, SolverOptions};
use battsite::network::{compute_off_sets, DemandSeries, RiskSeries};
use battsite::opf::{solve_extensive_form, BatteryConfig, Case, CostConfig, PlanningSolution};
use serde_json::{json, Value};
use tempfile::TempDir;

fn sample(file: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/three_bus").join(file)
}

/// Writes a config with absolute sample paths, merged with `extra`.
fn config(dir: &Path, extra: Value) -> PathBuf {
    let mut cfg = json!({
        "network": sample("network.json"),
        "demand": sample("demand.csv"),
        "risk": sample("risk.csv"),
        "period_hours": 24,
        "ph": {"rho": 1000.0, "tol": 1e-5},
        "out": dir.join("out"),
    });
    for (k, v) in extra.as_object().unwrap() {
        cfg[k] = v.clone();
    }
    let path = dir.join("config.json");
    fs::write(&path, cfg.to_string()).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_battsite")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn text(p: &Path) -> String {
    fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn library_case() -> Case {
    let demand = DemandSeries::from_csv("demand.csv", &text(&sample("demand.csv"))).unwrap();
    let risk = RiskSeries::from_csv("risk.csv", &text(&sample("risk.csv"))).unwrap();
    let schedule = compute_off_sets(&risk, 0.5, 24);
    Case::new(three_bus(), &demand, schedule, 48).unwrap()
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(m) => {
            for k in ["wall_ms", "solve_ms", "incumbent_ms"] {
                m.remove(k);
            }
            m.values_mut().for_each(strip_timing);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

fn untimed(p: &Path) -> Vec<Value> {
    text(p)
        .lines()
        .map(|l| {
            let mut v: Value = serde_json::from_str(l).unwrap();
            strip_timing(&mut v);
            v
        })
        .collect()
}

/// Every PH artifact with timing removed.
fn ph_artifacts(out: &Path) -> Vec<Value> {
    let mut all = untimed(&out.join("trace.jsonl"));
    for f in ["checkpoint.json", "result.json", "solution.json"] {
        let mut v: Value = serde_json::from_str(&text(&out.join(f))).unwrap();
        strip_timing(&mut v);
        all.push(v);
    }
    all
}

#[test]
fn solve_ef_writes_artifacts_matching_the_library() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), json!({}));
    let o = run(&["solve-ef", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    for f in ["solution.json", "timeseries.csv", "cost.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let sol = PlanningSolution::from_json(&text(&out.join("solution.json"))).unwrap();
    let lib = solve_extensive_form(&library_case(), &BatteryConfig::default(), &CostConfig::default(), &SolverOptions::default(), 2000)
        .unwrap();
    assert_eq!(sol.cost.total, lib.solution.cost.total);
    assert_eq!(text(&out.join("timeseries.csv")).lines().count(), 49);

    let o = run(&["validate", "--config", cfg.to_str().unwrap(), out.join("solution.json").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let o = run(&["report", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let csv = text(&out.join("report.csv"));
    assert_eq!(csv.lines().next(), Some("hour,load_shed,discharge"));
    assert_eq!(csv.lines().count(), 49);
}

#[test]
fn guardrail_and_missing_files() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), json!({"ef_hour_cap": 24}));
    let o = run(&["solve-ef", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("solve-ph"));

    let missing = dir.path().join("nowhere.csv");
    let cfg = config(dir.path(), json!({"demand": missing}));
    let o = run(&["solve-ef", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere.csv"));

    let cfg = config(dir.path(), json!({"unknown_field": 1}));
    assert_eq!(code(&run(&["solve-ef", "--config", cfg.to_str().unwrap()])), 1);
}

#[test]
fn infeasible_model_exits_2() {
    let dir = TempDir::new().unwrap();
    // Must-run generation with no demand and no storage has nowhere to go.
    let mut net: Value = serde_json::from_str(&text(&sample("network.json"))).unwrap();
    net["generators"][0]["g_min"] = json!(0.5);
    let np = dir.path().join("net.json");
    fs::write(&np, net.to_string()).unwrap();
    let dp = dir.path().join("zero.csv");
    fs::write(&dp, "id,h0\nb1,0\nb2,0\nb3,0\n").unwrap();
    let cfg = config(
        dir.path(),
        json!({"network": np, "demand": dp, "risk": null, "battery": {"x_total": 0.0, "x_max": 0.0}}),
    );
    let o = run(&["solve-ef", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn solve_ph_converges_on_two_periods() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), json!({}));
    let o = run(&["solve-ph", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    let result: Value = serde_json::from_str(&text(&out.join("result.json"))).unwrap();
    assert_eq!(result["periods"], json!(2));
    assert!(result["gap"].as_f64().unwrap() <= 5e-3);
    let o = run(&["validate", "--config", cfg.to_str().unwrap(), out.join("solution.json").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    for line in untimed(&out.join("trace.jsonl")) {
        for k in ["v", "residual", "LB", "UB", "gap"] {
            assert!(line.get(k).is_some(), "{k}");
        }
    }
    assert_eq!(text(&out.join("timing.jsonl")).lines().count(), text(&out.join("trace.jsonl")).lines().count());
}

#[test]
fn iteration_cap_exits_4_with_artifacts() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), json!({}));
    let o = run(&["solve-ph", "--config", cfg.to_str().unwrap(), "--max-iters", "1"]);
    assert_eq!(code(&o), 4);
    let out = dir.path().join("out");
    for f in ["solution.json", "trace.jsonl", "checkpoint.json", "result.json"] {
        assert!(out.join(f).exists(), "{f}");
    }

    let resumed = config(dir.path(), json!({"resume": out.join("checkpoint.json"), "out": dir.path().join("resumed")}));
    let o = run(&["solve-ph", "--config", resumed.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let first = untimed(&dir.path().join("resumed/trace.jsonl"));
    assert_eq!(first[0]["v"], json!(0));
    assert_eq!(first[2]["v"], json!(2));
}

#[test]
fn repeated_and_parallel_runs_are_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let c = TempDir::new().unwrap();
    let ca = config(a.path(), json!({}));
    let cb = config(b.path(), json!({}));
    let cc = config(c.path(), json!({}));
    assert_eq!(code(&run(&["solve-ph", "--config", ca.to_str().unwrap()])), 0);
    assert_eq!(code(&run(&["solve-ph", "--config", cb.to_str().unwrap()])), 0);
    assert_eq!(code(&run(&["solve-ph", "--config", cc.to_str().unwrap(), "--workers", "8"])), 0);
    let first = ph_artifacts(&a.path().join("out"));
    assert_eq!(first, ph_artifacts(&b.path().join("out")));
    assert_eq!(first, ph_artifacts(&c.path().join("out")));
    assert_eq!(text(&a.path().join("out/solution.json")), text(&c.path().join("out/solution.json")));
}

#[test]
fn validate_flags_corruption_and_bad_files() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), json!({}));
    assert_eq!(code(&run(&["solve-ef", "--config", cfg.to_str().unwrap()])), 0);
    let path = dir.path().join("out/solution.json");
    let mut sol = PlanningSolution::from_json(&text(&path)).unwrap();
    // l13 is off during day 2.
    sol.flow[30][2] = 0.25;
    let bad = dir.path().join("bad.json");
    fs::write(&bad, sol.to_json()).unwrap();
    let o = run(&["validate", "--config", cfg.to_str().unwrap(), bad.to_str().unwrap()]);
    assert_eq!(code(&o), 6);
    assert!(String::from_utf8_lossy(&o.stdout).contains("de-energized-flow"));

    let full = text(&path);
    let cut = dir.path().join("cut.json");
    fs::write(&cut, &full[..full.len() / 2]).unwrap();
    assert_eq!(code(&run(&["validate", "--config", cfg.to_str().unwrap(), cut.to_str().unwrap()])), 1);
}

#[test]
fn export_mps_round_trips() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), json!({}));
    let o = run(&["export-mps", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let out = dir.path().join("out");
    let lp = read_mps(&text(&out.join("extensive_form.mps"))).unwrap();
    let names: Value = serde_json::from_str(&text(&out.join("extensive_form.names.json"))).unwrap();
    let sol = solve_lp(&lp, &SolverOptions::default());
    let total = sol.objective + names["cost_offset"].as_f64().unwrap();
    let lib = solve_extensive_form(&library_case(), &BatteryConfig::default(), &CostConfig::default(), &SolverOptions::default(), 2000)
        .unwrap();
    assert!((total - lib.solution.cost.total).abs() <= 1e-6 * (1.0 + total.abs()));

    let o = run(&["export-mps", "--config", cfg.to_str().unwrap(), "--per-period", "--periods", "4"]);
    assert_eq!(code(&o), 0);
    for s in 0..4 {
        let p = out.join(format!("period_{s:03}.mps"));
        assert!(read_mps(&text(&p)).is_ok(), "{}", p.display());
    }
    assert!(!out.join("period_004.mps").exists());
}

#[test]
fn flags_override_the_file() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), json!({}));
    let o = run(&["solve-ph", "--config", cfg.to_str().unwrap(), "--rho=-1"]);
    assert_eq!(code(&o), 1);
    let o = run(&["solve-ph", "--config", cfg.to_str().unwrap(), "--periods", "1", "--out", dir.path().join("one").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let result: Value = serde_json::from_str(&text(&dir.path().join("one/result.json"))).unwrap();
    assert_eq!(result["periods"], json!(1));
    assert_eq!(result["iterations"], json!(0));
}
