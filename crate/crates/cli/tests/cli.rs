use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn ferrojet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ferrojet")).args(args).output().expect("spawn ferrojet")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr_error(o: &Output) -> Value {
    let s = String::from_utf8_lossy(&o.stderr);
    let line = s.lines().last().expect("error document on stderr");
    serde_json::from_str(line).unwrap()
}

#[test]
fn dispersion_strong_and_weak() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d5");
    let o = ferrojet(&["dispersion", "--gamma", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let d = json(&out.join("dispersion.json"));
    assert_eq!(d["schema_version"], 1);
    assert!((d["c0_squared"].as_f64().unwrap() - 2.0).abs() < 1e-14);
    let csv = std::fs::read_to_string(out.join("dispersion.csv")).unwrap();
    assert!(csv.starts_with("k,f,c_squared,g\n"));
    assert_eq!(csv.lines().count(), 1026);

    let out = dir.path().join("d15");
    assert_eq!(code(&ferrojet(&["dispersion", "--gamma", "15", "--out", out.to_str().unwrap()])), 0);
    let d = json(&out.join("dispersion.json"));
    assert_eq!(d["regime"], "weak");
    assert!(d["g_at_omega"].as_f64().unwrap().abs() <= 1e-9);
    assert!(d["g_prime_at_omega"].as_f64().unwrap().abs() <= 1e-6);
}

#[test]
fn validation_errors_exit_two_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let o = ferrojet(&["dispersion", "--gamma", "0.5", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let e = stderr_error(&o);
    assert_eq!(e["error"]["kind"], "validation");
    assert!(!out.exists(), "no output on validation failure");

    assert_eq!(code(&ferrojet(&["wnl", "--gamma", "9", "--out", out.to_str().unwrap()])), 2);
    assert_eq!(code(&ferrojet(&["solve", "--gamma", "5", "--branch", "gzcs", "--epsilon", "0", "--out", out.to_str().unwrap()])), 2);
    assert_eq!(code(&ferrojet(&["solve", "--gamma", "5", "--branch", "nls+", "--out", out.to_str().unwrap()])), 2);
    assert_eq!(code(&ferrojet(&["solve", "--gamma", "5", "--grid-n", "1000", "--out", out.to_str().unwrap()])), 2);
    assert_eq!(code(&ferrojet(&["frobnicate"])), 2);
    assert_eq!(code(&ferrojet(&["--help"])), 0);
}

#[test]
fn wnl_strong_coefficient() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w");
    let o = ferrojet(&["wnl", "--gamma", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let w = json(&out.join("wnl.json"));
    assert!((w["d0"].as_f64().unwrap() - 0.875).abs() < 1e-12);
    assert_eq!(w["all_passed"], true);
    let run = json(&out.join("run.json"));
    assert_eq!(run["command"], "wnl");
    assert_eq!(run["status"], "ok");
}

#[test]
fn solve_kdv_profile_is_even() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = ferrojet(&["solve", "--gamma", "5", "--epsilon", "0.1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out.join("report.json"));
    assert_eq!(r["converged"], true);
    assert!(r["iterations"].as_u64().unwrap() <= 10);
    let rows: Vec<Vec<f64>> = std::fs::read_to_string(out.join("profile.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    let n = rows.len();
    // nodes are -L + jh, so j and n - j mirror each other
    for j in 1..n {
        assert!((rows[j][1] - rows[n - j][1]).abs() < 1e-10);
    }
    assert!(out.join("eta.csv").exists());
}

#[test]
fn solve_nls_plus_weak() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("n");
    let o = ferrojet(&["solve", "--gamma", "15", "--epsilon", "0.1", "--branch", "nls+", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out.join("report.json"));
    assert_eq!(r["converged"], true);
    assert_eq!(r["branch"], "nls_plus");
    let head = std::fs::read_to_string(out.join("profile.csv")).unwrap();
    assert!(head.starts_with("Z,zeta_re,zeta_im,zeta_nls\n"));
}

#[test]
fn checks_greens_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    let o = ferrojet(&["checks", "--suite", "greens", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let c = json(&out.join("checks_greens.json"));
    assert_eq!(c["all_passed"], true);
    for id in ["G", "H1", "H3"] {
        let t = std::fs::read_to_string(out.join(format!("greens_{id}.csv"))).unwrap();
        assert_eq!(t.lines().count(), 13);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = ferrojet(&["solve", "--gamma", "5", "--branch", "gzcs", "--epsilon", "0.1,0.05", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["eps_0.1/profile.csv", "eps_0.05/profile.csv", "eps_0.05/report.json", "ladder.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn config_file_with_flag_override_and_line_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cfg");
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, format!("# strong case\ngamma = 3\nout = {}\n", out.display())).unwrap();
    let o = ferrojet(&["wnl", "--config", cfg.to_str().unwrap(), "--gamma", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let w = json(&out.join("wnl.json"));
    assert!((w["d0"].as_f64().unwrap() - 0.875).abs() < 1e-12);

    std::fs::write(&cfg, "gamma = 5\nepsilon = 0.1\nwidth = 3\n").unwrap();
    let o = ferrojet(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let msg = stderr_error(&o)["error"]["message"].as_str().unwrap().to_string();
    assert!(msg.contains(":3:") && msg.contains("width"), "{msg}");
}
