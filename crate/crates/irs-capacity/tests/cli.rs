use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_irs-capacity"))
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("irs-capacity-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn run_with(config: &str, args: &[&str], name: &str) -> (Output, PathBuf) {
    let dir = scratch(name);
    let cfg = dir.join("cfg.json");
    std::fs::write(&cfg, config).unwrap();
    let out = bin().args(args).arg("--config").arg(&cfg).current_dir(&dir).output().unwrap();
    (out, dir)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

const SCALAR: &str = r#"{"m": 1, "k": 1, "n_h": 1, "n_v": 1, "profile": {"kappa_min": 1.0}, "pdf": {"lambdas": [1]}}"#;

#[test]
fn pdf_single_gain_point() {
    let (o, _) = run_with(SCALAR, &["pdf"], "pdf-point");
    assert!(o.status.success());
    let s = stdout(&o);
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("lambda,density"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[0], 1.0);
    assert!((row[1] - 0.2277877).abs() < 1e-6, "{}", row[1]);
}

#[test]
fn pdf_grid_integrates_to_one() {
    let cfg = r#"{"m": 2, "k": 2, "n_h": 1, "n_v": 2, "pdf": {"points": 4000, "lambda_min": 1e-8, "lambda_max": 400, "log_spacing": true}}"#;
    let (o, _) = run_with(cfg, &["pdf"], "pdf-grid");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&stdout(&o));
    assert!(r.iter().all(|v| v[1] >= 0.0));
    let trap: f64 = r.windows(2).map(|w| 0.5 * (w[1][1] + w[0][1]) * (w[1][0] - w[0][0])).sum();
    assert!((trap - 1.0).abs() < 1e-2, "{trap}");
}

#[test]
fn capacity_schema_and_tiny_snr() {
    let cfg = r#"{"m": 2, "k": 2, "n_h": 1, "n_v": 2, "snr_linear": [1e-12, 10], "mc": {"trials": 2000}}"#;
    let (o, _) = run_with(cfg, &["capacity"], "capacity");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert_eq!(s.lines().next(), Some("snr_db,ec_analytic,ec_mc_mean,ec_mc_ci99,gap"));
    let r = rows(&s);
    assert_eq!(r.len(), 2);
    assert!((r[0][0] + 120.0).abs() < 1e-9);
    assert!(r[0][1] < 1e-9);
    for v in &r {
        assert!((v[4] - (v[1] - v[2]).abs()).abs() < 1e-12);
    }
}

#[test]
fn optimize_writes_trace_and_phases() {
    let cfg = r#"{"m": 2, "k": 2, "n_h": 1, "n_v": 1, "phases": "zero"}"#;
    let (o, dir) = run_with(cfg, &["optimize", "--out", "trace.csv"], "optimize");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = std::fs::read_to_string(dir.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("iteration,objective,grad_norm,step"));
    let r = rows(&trace);
    assert!(r.len() > 1);
    assert!(r.windows(2).all(|w| w[1][1] >= w[0][1]));
    let phases = std::fs::read_to_string(dir.join("trace.phases.csv")).unwrap();
    assert_eq!(phases.lines().next(), Some("element,phase"));
    let phi: f64 = phases.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((phi - 0.93 * std::f64::consts::PI).abs() < 1e-3, "{phi}");
}

#[test]
fn optimize_ideal_profile_is_single_row() {
    let cfg = r#"{"m": 2, "k": 2, "n_h": 1, "n_v": 2, "profile": {"kappa_min": 1.0}, "phases": [0.5, -0.5]}"#;
    let (o, dir) = run_with(cfg, &["optimize", "--out", "t.csv"], "ideal");
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(dir.join("t.csv")).unwrap().lines().count(), 2);
    assert_eq!(std::fs::read_to_string(dir.join("t.phases.csv")).unwrap(), "element,phase\n0,0.5\n1,-0.5\n");
}

#[test]
fn optimize_reports_iteration_cap() {
    let cfg = r#"{"m": 2, "k": 2, "n_h": 1, "n_v": 1, "phases": "zero", "optimizer": {"max_iters": 2}}"#;
    let (o, dir) = run_with(cfg, &["optimize", "--out", "t.csv"], "cap");
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("max_iters"));
    assert_eq!(std::fs::read_to_string(dir.join("t.csv")).unwrap().lines().count(), 4);
}

#[test]
fn sweep_schema_and_svg() {
    let cfg = r#"{"m": 2, "k": 2, "mc": {"trials": 2000},
        "sweep": {"axis": "kappa_min", "values": [0.5, 1.0], "series": ["random", "ideal"]}}"#;
    let (o, dir) = run_with(cfg, &["sweep", "--svg", "s.svg"], "sweep");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "axis_value,series,ec");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("0.5,random,"));
    assert!(lines[2].starts_with("0.5,ideal,"));
    assert!(lines[4].starts_with("1,ideal,"));
    let svg = std::fs::read_to_string(dir.join("s.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert!(svg.contains("kappa_min"));
}

#[test]
fn config_errors_exit_2() {
    for cfg in [r#"{"m": 0}"#, r#"{"unknown": true}"#, "not json", r#"{"sweep": {"axis": "bogus"}}"#] {
        let (o, _) = run_with(cfg, &["pdf"], "bad");
        assert_eq!(o.status.code(), Some(2), "{cfg}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(o.stdout.is_empty());
    }
    let o = bin().args(["pdf", "--config", "/nonexistent/cfg.json"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seed_and_trials_flags_apply() {
    let cfg = r#"{"m": 2, "k": 2, "n_h": 1, "n_v": 2, "phases": "zero", "mc": {"trials": 500}}"#;
    let a = stdout(&run_with(cfg, &["capacity", "--seed", "1"], "seed-a").0);
    let b = stdout(&run_with(cfg, &["capacity", "--seed", "2"], "seed-b").0);
    let c = stdout(&run_with(cfg, &["capacity", "--seed", "1"], "seed-c").0);
    let d = stdout(&run_with(cfg, &["capacity", "--seed", "1", "--trials", "800"], "seed-d").0);
    assert_eq!(a, c);
    assert_ne!(a, b);
    assert_ne!(a, d);
    // The analytic column ignores the seed.
    assert_eq!(rows(&a)[0][1], rows(&b)[0][1]);
}
