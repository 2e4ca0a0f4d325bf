use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use zipshape::config::load_scenario;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_zipshape"))
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn equilibrium_prints_operating_point() {
    let o = bin()
        .arg("equilibrium")
        .arg(bundled("startup.scenario"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "x1*=7.000 A, x3*=1.000 A, mu*=0.7017");

    let o = bin()
        .args(["equilibrium", "--v-star", "18"])
        .arg(bundled("startup.scenario"))
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("x1*=6.611 A, x3*=0.900 A"), "{}", stdout(&o));
}

#[test]
fn negative_capacitance_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.scenario");
    let base = std::fs::read_to_string(bundled("startup.scenario")).unwrap();
    let doc = format!("{base}\n[params_nominal]\nC = -1e-3\n");
    let line = doc.lines().count();
    std::fs::write(&path, &doc).unwrap();
    let o = bin().arg("equilibrium").arg(&path).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("params_nominal.C"), "{err}");
    assert!(err.contains(&format!("line {line}")), "{err}");
}

#[test]
fn unreachable_reference_is_a_run_error() {
    let o = bin()
        .args(["equilibrium", "--v-star", "40"])
        .arg(bundled("startup.scenario"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("unreachable"));
}

#[test]
fn simulate_writes_trace_plot_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out/trace.csv");
    let svg = dir.path().join("out/trace.svg");
    let o = bin()
        .arg("simulate")
        .arg(bundled("startup.scenario"))
        .args(["--t-end", "0.02", "--dt", "1e-5"])
        .arg("--out")
        .arg(&csv)
        .arg("--plot")
        .arg(&svg)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("overshoot_pct="));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,i1,vc,i2,xc,mu,mu_saturated_flag,d1,d2,d3,d1_hat,d2_hat,d3_hat,Hd,condition12_ratio"
    );
    // 2000 steps recorded every 10th step plus the initial sample.
    assert_eq!(lines.count(), 201);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));

    let m = bin()
        .arg("metrics")
        .arg(&csv)
        .args(["--v-star", "20"])
        .output()
        .unwrap();
    assert!(m.status.success(), "{}", stderr(&m));
    let first = stdout(&o)
        .lines()
        .find(|l| l.starts_with("peak_deviation_v"))
        .map(String::from);
    let again = stdout(&m)
        .lines()
        .find(|l| l.starts_with("peak_deviation_v"))
        .map(String::from);
    assert_eq!(first, again);
}

#[test]
fn sweep_writes_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .arg("sweep")
        .arg(bundled("startup.scenario"))
        .args(["--grid", "controller.alpha=10,30", "--grid", "controller.k=2,3"])
        .args(["--t-end", "0.01", "--dt", "1e-5"])
        .arg("--out")
        .arg(dir.path())
        .env("ZIPSHAPE_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let table = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[0].starts_with("id,controller.alpha,controller.k,overshoot_v"));
    assert!(rows[2].starts_with("1,10.0,3.0,"), "{}", rows[2]);
}

#[test]
fn empty_grid_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .arg("sweep")
        .arg(bundled("startup.scenario"))
        .args(["--grid", "controller.alpha="])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("metrics.csv").exists());

    let o = bin().arg("sweep").arg(bundled("startup.scenario")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn domain_writes_samples_and_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("domain.csv");
    let o = bin()
        .arg("domain")
        .arg(bundled("domain.scenario"))
        .args(["--n", "20", "--seed", "3", "--ic", "6,15,1,-1", "--stride", "10"])
        .args(["--t-end", "0.01", "--dt", "1e-5"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("inside=false"), "{}", stdout(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "x1,x2,x3,xc,tag");
    assert_eq!(text.lines().filter(|l| l.ends_with(",boundary")).count(), 20);
    assert_eq!(text.lines().filter(|l| l.ends_with(",interior")).count(), 20);
    assert!(text.lines().any(|l| l.ends_with(",trajectory")));
}

#[test]
fn bundled_scenarios_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "scenario") {
            load_scenario(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 10);
}
