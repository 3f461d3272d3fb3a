use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use spinsplit::cli::output::{read_series, SCAN_HEADER};

fn spinsplit(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_spinsplit"));
    cmd.args(args);
    if let Some(out) = out {
        cmd.arg("--out").arg(out);
    }
    cmd.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_writes_snapshots_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinsplit(
        &["simulate", "--preset", "example1", "--steps", "16", "--snapshot-every", "1"],
        Some(dir.path()),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 18);
    assert!(dir.path().join("snap_00000000.pgm").exists());
    assert!(dir.path().join("snap_00000016.pgm").exists());
    let snap = fs::read(dir.path().join("snap_00000016.pgm")).unwrap();
    assert!(snap.starts_with(b"P5\n50 50\n255\n"));
    assert_eq!(snap.len(), 13 + 2500);

    let records = read_series(&dir.path().join("series.csv")).unwrap();
    assert_eq!(records.len(), 17);
    assert_eq!(records.last().unwrap().step, 16);
    assert!((records.last().unwrap().time - 1.6).abs() < 1e-12);
}

#[test]
fn simulate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["simulate", "--preset", "example3", "--steps", "20", "--seed", "4"];
    assert!(spinsplit(&args, Some(a.path())).status.success());
    assert!(spinsplit(&args, Some(b.path())).status.success());
    assert_eq!(
        fs::read(a.path().join("series.csv")).unwrap(),
        fs::read(b.path().join("series.csv")).unwrap()
    );
}

#[test]
fn flags_override_preset() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinsplit(&["simulate", "--preset", "example1", "--dt", "0.05", "--steps", "4"], Some(dir.path()));
    assert!(o.status.success(), "{}", stderr(&o));
    let records = read_series(&dir.path().join("series.csv")).unwrap();
    assert!((records[4].time - 0.2).abs() < 1e-12);
}

#[test]
fn config_file_sits_between_preset_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# small run\npreset = example2\nn = 8\nsteps = 3\ndt = 0.02\n").unwrap();
    let out = dir.path().join("o");
    let o = spinsplit(
        &["simulate", "--config", cfg.to_str().unwrap(), "--steps", "5"],
        Some(&out),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let records = read_series(&out.join("series.csv")).unwrap();
    assert_eq!(records.len(), 6);
    assert!((records[5].time - 0.1).abs() < 1e-12);
}

#[test]
fn bad_config_exits_with_usage() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinsplit(&["simulate", "--n", "51", "--bc", "periodic"], Some(dir.path()));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("n:"), "{}", stderr(&o));

    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "n = 8\ncolour = blue\n").unwrap();
    let o = spinsplit(&["simulate", "--config", cfg.to_str().unwrap()], Some(dir.path()));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));

    let o = spinsplit(&["simulate", "--temperature", "0", "--scheme", "thermostat"], Some(dir.path()));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(spinsplit(&["simulate", "--bogus"], None).status.code(), Some(1));
    assert_eq!(spinsplit(&["frobnicate"], None).status.code(), Some(1));
    assert_eq!(spinsplit(&["--help"], None).status.code(), Some(0));
    assert_eq!(spinsplit(&["simulate", "--help"], None).status.code(), Some(0));
}

#[test]
fn rk4_blowup_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinsplit(
        &["simulate", "--preset", "example2", "--scheme", "rk4", "--dt", "0.02", "--steps", "100"],
        Some(dir.path()),
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("blow-up"));
    let records = read_series(&dir.path().join("series.csv")).unwrap();
    assert!(records.len() < 101);
}

#[test]
fn verify_passes() {
    let o = spinsplit(&["verify"], None);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 8);
}

#[test]
fn scan_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinsplit(
        &[
            "scan", "--preset", "example2", "--n", "8", "--dts", "0.05,0.02", "--seeds", "1,2", "--horizon", "0.2",
        ],
        Some(dir.path()),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(SCAN_HEADER));
    assert_eq!(lines.count(), 4);
}
