//! End-to-end runs of the `eqsens` binary on a small 1-D scenario.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = "\
[grid]
nx = 1
ny = 1
nz = 200
dx = 1.0
dy = 1.0
dz = 0.001

[region slab]
cells = 1, 1, 100:120
eps_r = 3.0

[simulation]
dt = 2.9e-12
nsteps = 6000
source_cells = 1, 1, 20
source_component = ex
ts = 1.5e-11
t0 = 9e-11

[param len]
cells = 1, 1, 120
axis = z

[param front]
cells = 1, 1, 100
axis = z

[param eps]
cells = 1, 1, 105:110
axis = material

[analysis]
observable = s11
f_lo = 1e9
f_hi = 2e10
freqs = 40
";

struct Env {
    dir: TempDir,
    scenario: PathBuf,
}

fn env() -> Env {
    let dir = TempDir::new().unwrap();
    let scenario = dir.path().join("small.txt");
    fs::write(&scenario, SMALL).unwrap();
    Env { dir, scenario }
}

impl Env {
    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, task: &str, out: &str, extra: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_eqsens"))
            .arg(task)
            .arg("--scenario")
            .arg(&self.scenario)
            .arg("--out")
            .arg(self.out(out))
            .args(extra)
            .output()
            .unwrap()
    }
}

fn manifest(dir: &Path) -> Vec<(String, String)> {
    fs::read_to_string(dir.join("manifest.txt"))
        .unwrap()
        .lines()
        .filter_map(|l| l.split_once(" = ").map(|(k, v)| (k.to_string(), v.to_string())))
        .collect()
}

fn key(m: &[(String, String)], k: &str) -> String {
    m.iter().find(|(a, _)| a == k).map(|(_, v)| v.clone()).unwrap_or_default()
}

#[test]
fn jacobian_writes_one_csv_per_parameter_from_one_run() {
    let e = env();
    let o = e.run("jacobian", "jac", &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&e.out("jac"));
    assert_eq!(key(&m, "task"), "jacobian");
    assert_eq!(key(&m, "run_count"), "1");
    assert_eq!(key(&m, "observable"), "s11");
    assert!(!key(&m, "wall_time_s").is_empty() && !key(&m, "eqsens_version").is_empty());
    for p in ["len", "front", "eps"] {
        let csv = fs::read_to_string(e.out("jac").join(format!("jacobian_{p}.csv"))).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("frequency_hz,real,imag,magnitude,phase_rad"));
        assert!(lines.count() > 10);
    }
}

#[test]
fn repeated_runs_are_bit_identical() {
    let e = env();
    for d in ["a", "b"] {
        assert!(e.run("high-order", d, &["--params", "len", "--order", "3"]).status.success());
    }
    for m in 1..=3 {
        let f = format!("high-order_len_m{m}.csv");
        assert_eq!(fs::read(e.out("a").join(&f)).unwrap(), fs::read(e.out("b").join(&f)).unwrap());
    }
    assert_eq!(key(&manifest(&e.out("a")), "run_count"), "2");
}

#[test]
fn hessian_and_mixed_report_their_budgets() {
    let e = env();
    assert!(e.run("hessian", "h", &["--params", "len,front,eps"]).status.success());
    assert_eq!(key(&manifest(&e.out("h")), "run_count"), "4");
    assert_eq!(fs::read_dir(e.out("h")).unwrap().count(), 7);
    assert!(e.run("mixed", "m", &["--params", "len,front"]).status.success());
    assert_eq!(key(&manifest(&e.out("m")), "run_count"), "3");
}

#[test]
fn compare_passes_and_fails_on_the_tolerance() {
    let e = env();
    let ok = e.run("compare", "c1", &["--task", "jacobian", "--oracle", "dual", "--param", "len"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("aggregate relative L2 error"));
    let agg: f64 = key(&manifest(&e.out("c1")), "aggregate_l2").parse().unwrap();
    assert!(agg < 0.01);
    let csv = fs::read_to_string(e.out("c1").join("compare_len_dual.csv")).unwrap();
    assert!(csv.starts_with("frequency_hz,relative_error\n"));
    let bad = e.run("compare", "c2", &["--task", "jacobian", "--oracle", "cfd", "--param", "len", "--tol", "1e-12"]);
    assert_eq!(bad.status.code(), Some(4));
}

#[test]
fn oracles_write_tagged_spectra() {
    let e = env();
    assert!(e.run("oracle-dual", "d", &["--params", "len", "--order", "2"]).status.success());
    assert!(e.out("d").join("oracle-dual_len_m2.csv").exists());
    assert!(e.run("oracle-cfd", "c", &["--params", "len", "--order", "1", "--h", "1e-5"]).status.success());
    let m = manifest(&e.out("c"));
    assert_eq!(key(&m, "h_len"), "1e-5");
    assert_eq!(key(&m, "run_count"), "2");
    assert!(e.run("oracle-cfd", "x", &["--params", "len,front", "--order", "2", "--cross"]).status.success());
    assert_eq!(key(&manifest(&e.out("x")), "run_count"), "4");
    assert_eq!(e.run("oracle-cfd", "y", &["--params", "len", "--order", "3"]).status.code(), Some(2));
}

#[test]
fn taylor_check_residuals_fall_with_order() {
    let e = env();
    let o = e.run("taylor-check", "t", &["--params", "len", "--order", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&e.out("t"));
    let r1: f64 = key(&m, "residual_order1").parse().unwrap();
    let r2: f64 = key(&m, "residual_order2").parse().unwrap();
    assert!(r2 < r1);
}

#[test]
fn sources_export_first_arrivals() {
    let e = env();
    assert!(e.run("sources", "s", &["--params", "front,len"]).status.success());
    let m = manifest(&e.out("s"));
    let a: usize = key(&m, "first_arrival_front").parse().unwrap();
    let b: usize = key(&m, "first_arrival_len").parse().unwrap();
    assert!(a < b);
    let csv = fs::read_to_string(e.out("s").join("sources_len.csv")).unwrap();
    assert!(csv.starts_with("step,cell,component,kind,value\n"));
}

#[test]
fn validation_failures_exit_with_code_2() {
    let e = env();
    assert_eq!(e.run("jacobian", "v1", &["--params", "nope"]).status.code(), Some(2));
    assert_eq!(e.run("jacobian", "v2", &["--band", "5e9"]).status.code(), Some(2));
    assert_eq!(e.run("mixed", "v3", &["--params", "len"]).status.code(), Some(2));
    let broken = e.dir.path().join("broken.txt");
    fs::write(&broken, SMALL.replace("dt = 2.9e-12", "dt = 9e-12").replace("[param len]", "[param len]\ncolour = red"))
        .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_eqsens")).args(["jacobian", "--scenario"]).arg(&broken).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("CFL") && err.contains("colour"), "{err}");
}

#[test]
fn show_scenario_prints_text_that_parses_back() {
    let o = Command::new(env!("CARGO_BIN_EXE_eqsens"))
        .args(["show-scenario", "--scenario", "microstrip-desk"])
        .output()
        .unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let s = eqsens::Scenario::parse(&text).unwrap();
    assert_eq!(s, eqsens::Scenario::builtin("microstrip-desk").unwrap());
}

#[test]
fn threads_flag_caps_the_pool() {
    let e = env();
    assert!(e.run("jacobian", "t1", &["--params", "len", "--threads", "1"]).status.success());
    assert_eq!(key(&manifest(&e.out("t1")), "threads"), "1");
    assert_eq!(e.run("jacobian", "t0", &["--threads", "0"]).status.code(), Some(2));
}
