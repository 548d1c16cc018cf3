use std::path::Path;
use std::process::{Command, Output};

fn torwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_torwalk")).args(args).env("TORWALK_THREADS", "2").output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const STABLE: &str = r#"{"L":1024,"d":1,"W":16,"profile":{"kind":"power_law","alpha":1.0}}"#;
const GAUSS: &str = r#"{"L":256,"d":1,"W":8,"profile":{"kind":"hypercube","r":1.0},"seed":5}"#;

#[test]
fn kernel_writes_one_row_per_site() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "walk.json", STABLE);
    let out = dir.path().join("pn.csv");
    let o = torwalk(&["kernel", "--config", &cfg, "--n", "100", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1024 + 1);
    let total: f64 =
        text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-10);
}

#[test]
fn compare_prints_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "walk.json", STABLE);
    let csv = dir.path().join("row.csv");
    let o = torwalk(&["compare", "--config", &cfg, "--n", "64", "--mode", "stable", "--csv", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["regime"], "II");
    assert!(v["sup_rel_error"].as_f64().unwrap() > 0.0);
    assert_eq!(std::fs::read_to_string(csv).unwrap().lines().count(), 2);
}

#[test]
fn sweep_writes_member_rows() {
    let dir = tempfile::tempdir().unwrap();
    let fam = write(
        dir.path(),
        "family.json",
        r#"{"name":"g","mode":"gaussian","profile":{"kind":"hypercube","r":1.0},
            "members":[{"L":128,"W":4,"n":64},{"L":256,"W":4,"n":128},{"L":512,"W":4,"n":256}]}"#,
    );
    let out = dir.path().join("sweep.csv");
    let o = torwalk(&["sweep", "--family", &fam, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("128,1,4,"));
    assert!(lines[3].starts_with("512,1,4,"));
}

#[test]
fn other_subcommands_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", STABLE);
    let g = write(dir.path(), "g.json", GAUSS);
    let f = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    for args in [
        vec!["symbol", "--config", &s, "--out", &f("sym.csv")],
        vec!["limit", "--config", &s, "--n", "64", "--mode", "stable", "--out", &f("lim.csv")],
        vec!["limit", "--config", &g, "--n", "20", "--mode", "gaussian", "--regime", "I", "--out", &f("glim.csv")],
        vec!["mc", "--config", &g, "--n", "3", "--chains", "20000", "--out", &f("mc.csv")],
        vec!["theta", "--alpha", "1.5", "--tau", "0.7", "--z", "0.2", "--spatial-cutoff", "100"],
        vec!["theta", "--kind", "jacobi", "--gamma", "1,0.2,0.2,0.5", "--z", "0.1,0.3"],
        vec!["validate", "--config", &g],
    ] {
        let o = torwalk(&args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let mc = std::fs::read_to_string(f("mc.csv")).unwrap();
    assert!(mc.lines().any(|l| l == "x1,value,se"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", STABLE);
    let bad = write(dir.path(), "bad.json", r#"{"L":64,"d":1,"W":4,"profile":{"kind":"cone"}}"#);
    assert_eq!(torwalk(&["--help"]).status.code(), Some(0));
    assert_eq!(torwalk(&["--version"]).status.code(), Some(0));
    assert_eq!(torwalk(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(torwalk(&["kernel", "--config", &bad, "--n", "1"]).status.code(), Some(3));
    assert_eq!(torwalk(&["kernel", "--config", "/nonexistent/walk.json", "--n", "1"]).status.code(), Some(3));
    // Gaussian theorems do not apply to heavy tails.
    assert_eq!(torwalk(&["compare", "--config", &s, "--n", "64", "--mode", "gaussian"]).status.code(), Some(1));
    // n = 8 falls between the regimes of the threshold rule.
    assert_eq!(torwalk(&["compare", "--config", &s, "--n", "8", "--mode", "stable"]).status.code(), Some(1));
    // A nearly flat quadratic form cannot be summed to tolerance.
    assert_eq!(torwalk(&["theta", "--kind", "jacobi", "--gamma", "1e-9", "--z", "0"]).status.code(), Some(2));
}
