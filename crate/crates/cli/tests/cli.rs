use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = "\
[basis]
L = 1
K = 2

[grid]
nx = 40
boundary = periodic

[run]
t_end = 0.1
snapshot_every = 5

[phi0]
kind = wave
slope.x = 1.0
amplitude = 0.1
wavenumber.x = 3.141592653589793

[velocity]
mode.0 = 1.0
mode.1 = 0.1
";

fn sgls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgls"))
        .args(args)
        .env("SGLS_THREADS", "2")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn snapshots(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("snap_") && n.ends_with(".bin"))
        .collect();
    names.sort();
    names
}

#[test]
fn solve_writes_snapshots_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.cfg", CONFIG);
    let out = dir.path().join("run");
    let o = sgls(&["solve", "--config", &cfg, "--out", out.to_str().unwrap(), "--csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let snaps = snapshots(&out);
    assert!(snaps.len() >= 2);
    assert!(out.join("snap_000000.csv").exists());
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "solve");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["threads"], 2);
    assert_eq!(manifest["t_final"], 0.1);
    assert!(manifest["failure"].is_null());
    let bytes = fs::read(out.join(&snaps[0])).unwrap();
    assert_eq!(&bytes[..4], b"SGLS");

    // Identical manifests give identical payloads.
    let again = dir.path().join("again");
    let o = sgls(&["solve", "--config", &cfg, "--out", again.to_str().unwrap()]);
    assert!(o.status.success());
    for s in &snaps {
        assert_eq!(fs::read(out.join(s)).unwrap(), fs::read(again.join(s)).unwrap());
    }
}

#[test]
fn band_from_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.cfg", CONFIG);
    let out = dir.path().join("run");
    assert!(sgls(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    let last = snapshots(&out).pop().unwrap();
    let snap = out.join(&last);
    let o = sgls(&["band", "--snapshot", snap.to_str().unwrap(), "--epsilon", "0.05", "--p", "0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(snap.with_extension("band.txt")).unwrap();
    assert!(text.contains("# epsilon = 0.05"));
    assert!(text.contains("# p = 0.5"));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.split(' ').count() == 4 && r.ends_with(" 1")));
}

#[test]
fn check_reports_degenerate_gradient_cells() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[grid]\ndims = 2\nnx = 5\nny = 5\n[phi0]\nkind = circle\nradius = 0.5\n";
    let cfg = write(dir.path(), "c.cfg", text);
    let o = sgls(&["check", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.starts_with("ERROR code=degenerate_gradient cells=12 "), "{err}");
}

#[test]
fn check_passes_on_smooth_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.cfg", CONFIG);
    let o = sgls(&["check", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("check: ok"));
}

#[test]
fn config_errors_are_machine_parsable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.cfg", "[run]\ncfl = 1.5\n[extra]\n");
    let o = sgls(&["check", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("ERROR code=config line=2 section=run key=cfl message="));
    assert!(lines[1].starts_with("ERROR code=config line=3 section=extra message="));
}

#[test]
fn missing_file_is_io_error() {
    let o = sgls(&["solve", "--config", "/nonexistent/c.cfg", "--out", "/tmp/unused"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).starts_with("ERROR code=io"));
}

#[test]
fn oracle_monte_carlo_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.cfg", CONFIG);
    let out = dir.path().join("mc");
    let o = sgls(&["oracle", "--config", &cfg, "--out", out.to_str().unwrap(), "--samples", "16", "--seed", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["moments.bin", "band.txt", "envelopes.txt", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 3);
    let o = sgls(&["oracle", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("ERROR code=usage"));
}

#[test]
fn basis_dump() {
    let o = sgls(&["basis", "-L", "1", "-K", "1"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.starts_with("# triple products"));
}

#[test]
fn bad_thread_count_rejected() {
    let o = Command::new(env!("CARGO_BIN_EXE_sgls"))
        .args(["basis", "-L", "1", "-K", "1"])
        .env("SGLS_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("SGLS_THREADS"));
}
