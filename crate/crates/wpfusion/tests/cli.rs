use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn wpfusion(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wpfusion")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = wpfusion(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    /// Scenario from seed 5 plus a run config next to it.
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace { dir };
        ok(&["simulate", "--seed", "5", "--out", &ws.path("scenario.json")]);
        let run = r#"{"scenario": "scenario.json", "rcpm": {"k": 8, "sigma": 30, "iterations": 4}, "output_dir": "out"}"#;
        fs::write(ws.path("run.json"), run).unwrap();
        ws
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_string_lossy().into_owned()
    }

    fn read(&self, name: &str) -> String {
        fs::read_to_string(self.dir.path().join(name)).unwrap()
    }
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

fn value(table: &[Vec<String>], method: &str, task: &str, metric: &str, rank: &str) -> f64 {
    table
        .iter()
        .find(|r| r[0] == method && r[1] == task && r[2] == metric && r[3] == rank)
        .unwrap_or_else(|| panic!("no row {method},{task},{metric},{rank}"))[4]
        .parse()
        .unwrap()
}

#[test]
fn simulate_with_defaults_writes_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let res = ok(&["simulate", "--out", out.to_str().unwrap()]);
    assert!(out.exists());
    let stdout = String::from_utf8(res.stdout).unwrap();
    assert!(stdout.contains("sequences") && stdout.contains("queries"), "{stdout}");
}

#[test]
fn simulate_missing_config_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere").join("sim.json");
    let out = wpfusion(&["simulate", "--config", missing.to_str().unwrap(), "--out", "x.json"]);
    assert!(!out.status.success());
    assert!(out.stdout.is_empty());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains(missing.to_str().unwrap()), "{err}");
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.json");
    fs::write(&cfg, r#"{"n_identities": 8, "n_with_phone": 5, "duration_secs": 120, "min_presence_secs": 120}"#).unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        ok(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "42", "--out", out.to_str().unwrap()]);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let c = dir.path().join("c.json");
    ok(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "43", "--out", c.to_str().unwrap()]);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn invalid_sim_config_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.json");
    fs::write(&cfg, r#"{"n_identities": 3, "n_with_phone": 4}"#).unwrap();
    let out = wpfusion(&["simulate", "--config", cfg.to_str().unwrap(), "--out", "x.json"]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("simgen") && err.contains("n_with_phone"), "{err}");
}

#[test]
fn zero_iterations_reproduce_baselines() {
    let ws = Workspace::new();
    ok(&["run", "--config", &ws.path("run.json"), "--iters", "0"]);
    let t = rows(&ws.read("out/metrics.csv"));
    for (metric, rank) in [("cmc", "1"), ("cmc", "5"), ("cmc", "20"), ("map", "")] {
        assert_eq!(value(&t, "rcpm", "reid", metric, rank), value(&t, "visual", "reid", metric, rank));
        assert_eq!(value(&t, "rcpm", "signal", metric, rank), value(&t, "sm-baseline", "signal", metric, rank));
    }
}

#[test]
fn fusion_beats_signal_baseline_on_default_scenario() {
    let ws = Workspace::new();
    let out = ok(&["run", "--config", &ws.path("run.json")]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("rcpm"));
    let t = rows(&ws.read("out/metrics.csv"));
    assert!(value(&t, "rcpm", "signal", "cmc", "1") >= value(&t, "sm-baseline", "signal", "cmc", "1"));
    assert_eq!(ws.read("out/metrics.csv").lines().next(), Some("method,task,metric,rank,value"));
    let report: serde_json::Value = serde_json::from_str(&ws.read("out/report.json")).unwrap();
    assert_eq!(report["results"].as_array().unwrap().len(), 4);
}

#[test]
fn dumps_have_matrix_shapes() {
    let ws = Workspace::new();
    ok(&["run", "--config", &ws.path("run.json"), "--dump-f", "--dump-s0", "--dump-d0"]);
    let sc: serde_json::Value = serde_json::from_str(&ws.read("scenario.json")).unwrap();
    let n = sc["sequences"].as_array().unwrap().len();
    let m = sc["signals"].as_array().unwrap().len();
    for (name, cols) in [("out/f.csv", n), ("out/s0.csv", n), ("out/d0.csv", m)] {
        let text = ws.read(name);
        assert_eq!(text.lines().count(), n, "{name}");
        assert!(text.lines().all(|l| l.split(',').count() == cols), "{name}");
    }
    assert!(!Path::new(&ws.path("out/s.csv")).exists());
}

#[test]
fn flags_override_config_values() {
    let ws = Workspace::new();
    ok(&["run", "--config", &ws.path("run.json"), "--k", "3", "--sigma", "12.5", "--variant", "star", "--out-dir", &ws.path("o")]);
    let report: serde_json::Value = serde_json::from_str(&ws.read("o/report.json")).unwrap();
    assert_eq!(report["config"]["rcpm"]["k"], 3);
    assert_eq!(report["config"]["rcpm"]["sigma"], 12.5);
    assert_eq!(report["config"]["rcpm"]["variant"], "star");
    assert!(rows(&ws.read("o/metrics.csv")).iter().any(|r| r[0] == "rcpm-star"));
}

#[test]
fn run_rejects_k_above_sequence_count() {
    let ws = Workspace::new();
    let out = wpfusion(&["run", "--config", &ws.path("run.json"), "--k", "100000"]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error: rcpm:") && err.contains("`k`"), "{err}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let ws = Workspace::new();
    for out in ["a", "b"] {
        ok(&["run", "--config", &ws.path("run.json"), "--compare-star", "--dump-s0", "--out-dir", &ws.path(out)]);
    }
    assert_eq!(ws.read("a/metrics.csv"), ws.read("b/metrics.csv"));
    assert_eq!(ws.read("a/s0.csv"), ws.read("b/s0.csv"));
}

fn sweep(ws: &Workspace, grid: &str) -> Output {
    let cfg = format!(r#"{{"run": {{"scenario": "scenario.json", "eval": {{"ranks": [1]}}}}, "grid": {grid}}}"#);
    fs::write(ws.path("sweep.json"), cfg).unwrap();
    wpfusion(&["sweep", "--config", &ws.path("sweep.json"), "--out", &ws.path("sweep.csv"), "--seed", "1"])
}

#[test]
fn sweep_over_k_gives_one_row_per_point_and_metric() {
    let ws = Workspace::new();
    let out = sweep(&ws, r#"{"k": [1,2,3,4,5,6,7,8,9,10,11,12], "sigma": [30], "iterations": [4]}"#);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = ws.read("sweep.csv");
    assert_eq!(text.lines().next(), Some("k,sigma,iterations,variant,task,metric,rank,value"));
    let t = rows(&text);
    for (task, metric) in [("reid", "cmc"), ("reid", "map"), ("signal", "cmc"), ("signal", "map")] {
        let ks: Vec<&str> = t.iter().filter(|r| r[4] == task && r[5] == metric).map(|r| r[0].as_str()).collect();
        assert_eq!(ks, ["1", "2", "3", "4", "5", "6", "7", "8", "9", "10", "11", "12"]);
    }
}

#[test]
fn sweep_over_iterations_includes_both_variants() {
    let ws = Workspace::new();
    let out = sweep(&ws, r#"{"k": [8], "sigma": [30], "iterations": [0,1,2,3,4,5,6,7,8], "variant": ["standard", "star"]}"#);
    assert!(out.status.success());
    let first = ws.read("sweep.csv");
    let t = rows(&first);
    for variant in ["standard", "star"] {
        assert_eq!(t.iter().filter(|r| r[3] == variant && r[4] == "signal" && r[5] == "cmc").count(), 9);
    }
    let zero: Vec<&Vec<String>> = t.iter().filter(|r| r[2] == "0").collect();
    let std0: Vec<&String> = zero.iter().filter(|r| r[3] == "standard").map(|r| &r[7]).collect();
    let star0: Vec<&String> = zero.iter().filter(|r| r[3] == "star").map(|r| &r[7]).collect();
    assert_eq!(std0, star0);
    sweep(&ws, r#"{"k": [8], "sigma": [30], "iterations": [0,1,2,3,4,5,6,7,8], "variant": ["standard", "star"]}"#);
    assert_eq!(ws.read("sweep.csv"), first);
}

#[test]
fn empty_grid_is_invalid_config() {
    let ws = Workspace::new();
    let out = sweep(&ws, r#"{"k": [8], "sigma": [], "iterations": [4]}"#);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("invalid config field `grid.sigma`"), "{err}");
    assert!(!Path::new(&ws.path("sweep.csv")).exists());
}

#[test]
fn eval_scores_dumped_matrices_like_run() {
    let ws = Workspace::new();
    ok(&["run", "--config", &ws.path("run.json"), "--dump-s", "--dump-d"]);
    ok(&[
        "eval",
        "--scenario",
        &ws.path("scenario.json"),
        "--affinity",
        &ws.path("out/s.csv"),
        "--distances",
        &ws.path("out/d.csv"),
        "--method",
        "rcpm",
        "--seed",
        "0",
        "--out-dir",
        &ws.path("ev"),
    ]);
    let run: Vec<Vec<String>> = rows(&ws.read("out/metrics.csv")).into_iter().filter(|r| r[0] == "rcpm").collect();
    assert_eq!(rows(&ws.read("ev/metrics.csv")), run);
}

#[test]
fn eval_needs_a_matrix() {
    let ws = Workspace::new();
    let out = wpfusion(&["eval", "--scenario", &ws.path("scenario.json"), "--out-dir", &ws.path("ev")]);
    assert!(!out.status.success());
}

#[test]
fn georef_writes_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| -> PathBuf { dir.path().join(n) };
    fs::write(
        p("controls.json"),
        r#"[{"pixel": [0, 0], "world": [31.0002, 121.0]},
            {"pixel": [100, 0], "world": [31.0002, 121.0002]},
            {"pixel": [100, 100], "world": [31.0, 121.0002]},
            {"pixel": [0, 100], "world": [31.0, 121.0]}]"#,
    )
    .unwrap();
    fs::write(p("det.json"), r#"{"camera": 1, "tracks": [{"id": 7, "boxes": [[0, 40, 20, 20, 30], [1000, 42, 20, 20, 30]]}]}"#)
        .unwrap();
    let s = |q: PathBuf| q.to_string_lossy().into_owned();
    ok(&[
        "georef",
        "--controls",
        &s(p("controls.json")),
        "--detections",
        &s(p("det.json")),
        "--origin",
        "31.0,121.0",
        "--seed",
        "0",
        "--out",
        &s(p("traj.json")),
    ]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(p("traj.json")).unwrap()).unwrap();
    assert_eq!(v["camera"], 1);
    let first = &v["trajectories"][0]["points"][0];
    assert_eq!(first[0], 0);
    // foot point (50, 50) sits midway across the surveyed square
    let half_lon = 0.0001_f64.to_radians() * 6_371_008.8 * 31.0_f64.to_radians().cos();
    assert!((first[1].as_f64().unwrap() - half_lon).abs() < 0.05);
}
