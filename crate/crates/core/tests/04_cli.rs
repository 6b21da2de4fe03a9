use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vortexnoise"))
}

const CONFIG: &str = r#"
experiment = "cli"
system = "particles"
vortex_count = 8
noise_cutoff = 3
galerkin_cutoff = 3
fourier_cutoff = 0
kernel_grid = 64
dt = 0.001
t_final = 0.01
sample_times = [0.0, 0.005, 0.01]
lags = [0.005]
ensemble_size = 6
master_seed = 1
observables = ["mode(1,0)", "circulation"]
trajectory_run = 0
series_runs = 2
"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("cfg.toml");
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn simulate_requires_seed() {
    let (code, _) = run(&["simulate"]);
    assert_eq!(code, 2);
    let (code, _) = run(&["galerkin"]);
    assert_eq!(code, 2);
}

#[test]
fn unknown_subcommand_is_usage_error() {
    assert_eq!(run(&["frobnicate"]).0, 2);
}

#[test]
fn simulate_writes_outputs_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("out");
    let (code, _) = run(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "42", "--output", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["master_seed"], 42);
    assert_eq!(summary["config"]["master_seed"], 42);
    assert_eq!(summary["config_hash"].as_str().unwrap().len(), 64);
    let means = fs::read_to_string(out.join("means.csv")).unwrap();
    assert_eq!(means.lines().next(), Some("t,name,value"));
    assert_eq!(means.lines().count(), 1 + 2 * 3);
    let traj = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next(), Some("t,i,xi,x1,x2"));
    assert_eq!(traj.lines().count(), 1 + 8 * 3);
    assert!(out.join("run_00000.csv").exists() && out.join("run_00001.csv").exists());
    assert!(!out.join("run_00002.csv").exists());
}

#[test]
fn same_seed_same_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let read = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let (code, _) = run(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", seed, "--output", out.to_str().unwrap()]);
        assert_eq!(code, 0);
        fs::read_to_string(out.join("summary.json")).unwrap()
    };
    let a = read("a", "5");
    let b = read("b", "5");
    let c = read("c", "6");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn rerun_from_summary_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(run(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "9", "--output", a.to_str().unwrap()]).0, 0);
    let s = a.join("summary.json");
    assert_eq!(run(&["simulate", "--config", s.to_str().unwrap(), "--seed", "9", "--output", b.to_str().unwrap()]).0, 0);
    assert_eq!(fs::read_to_string(s).unwrap(), fs::read_to_string(b.join("summary.json")).unwrap());
}

#[test]
fn galerkin_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let g = dir.path().join("g");
    let p = dir.path().join("p");
    assert_eq!(run(&["galerkin", "--config", cfg.to_str().unwrap(), "--seed", "3", "--output", g.to_str().unwrap()]).0, 0);
    assert_eq!(run(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "3", "--output", p.to_str().unwrap()]).0, 0);
    let sg = g.join("summary.json");
    let sp = p.join("summary.json");
    let (code, out) = run(&["compare", sg.to_str().unwrap(), sg.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.starts_with("observable,lag,a,b,difference,combined_se,pass"));
    let (code, _) = run(&["compare", sp.to_str().unwrap(), sg.to_str().unwrap(), "--se-multiple", "0", "--tolerance", "0"]);
    assert_eq!(code, 1);
}

#[test]
fn invalid_config_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{CONFIG}\nbogus_key = 1\n"));
    assert_eq!(run(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "1"]).0, 2);
    let cfg = write_config(dir.path(), &CONFIG.replace("dt = 0.001", "dt = 0.0015"));
    assert_eq!(run(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "1"]).0, 2);
}

#[test]
fn moments_reports_exact_values() {
    let (code, out) = run(&["moments", "--vortices", "4", "--cutoff", "4", "--l", "1,0", "--m", "0,1"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["constant_kernel"], 3.0);
    assert!((v["second_moment_r"].as_f64().unwrap() - 0.299_655_410_568_6).abs() < 1e-9);
}

#[test]
fn exhausted_budget_is_numerical_failure() {
    let (code, _) = run(&["moments", "--vortices", "4", "--cutoff", "8", "--generic", "--budget", "10"]);
    assert_eq!(code, 3);
}

#[test]
fn accept_runs_selected_criteria() {
    let (code, out) = run(&["accept", "--only", "3"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("PASS criterion  3"));
    assert_eq!(run(&["accept", "--only", "99"]).0, 2);
}
