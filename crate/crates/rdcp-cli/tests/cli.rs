//! End-to-end checks of the command-line surfaces.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rdcp"))
}

fn tmp(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("rdcp-cli-{}-{name}", std::process::id()))
}

#[test]
fn simulate_is_byte_reproducible() {
    let dirs = [tmp("sim1"), tmp("sim2")];
    for dir in &dirs {
        let status = bin()
            .args([
                "simulate",
                "--host",
                "complete:100",
                "--dist",
                "2:1",
                "--until",
                "final",
                "--seed",
                "7",
                "--replicas",
                "4",
                "--trajectory",
                "--out",
            ])
            .arg(dir)
            .status()
            .unwrap();
        assert!(status.success());
    }
    for name in ["summary.csv", "aggregate.csv", "trajectory.csv"] {
        let a = std::fs::read(dirs[0].join(name)).unwrap();
        let b = std::fs::read(dirs[1].join(name)).unwrap();
        assert_eq!(a, b, "{name} not reproducible");
        assert!(!a.is_empty());
    }
    // d = 2 on K_100 saturates all but a few vertices in the final graph.
    let summary = std::fs::read_to_string(dirs[0].join("summary.csv")).unwrap();
    let first = summary.lines().find(|l| l.starts_with("0,")).unwrap();
    let unsat: f64 = first.split(',').nth(3).unwrap().parse().unwrap();
    assert!(unsat < 0.1, "unsat fraction {unsat}");
    for dir in &dirs {
        std::fs::remove_dir_all(dir).ok();
    }
}

#[test]
fn parity_violation_is_surfaced() {
    let out = bin()
        .args(["simulate", "--host", "regular:5:3", "--dist", "2:1", "--out"])
        .arg(tmp("parity"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("odd"), "stderr: {msg}");
}

#[test]
fn critical_time_flags_below_resolution() {
    let dir = tmp("crit");
    let status = bin()
        .args(["critical-time", "--dist", "12:1", "--abs-tol", "1e-11", "--out"])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.join("critical.csv")).unwrap();
    assert!(csv.contains("below_resolution"), "{csv}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn compare_radius_zero_is_exactly_zero() {
    let dir = tmp("cmp0");
    let status = bin()
        .args([
            "compare",
            "--host",
            "complete:200",
            "--dist",
            "3:1",
            "--t-hat",
            "0.5",
            "--radius",
            "0",
            "--samples",
            "2000",
            "--out",
        ])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.join("compare.csv")).unwrap();
    let row = csv.lines().last().unwrap();
    assert_eq!(row, "0,2000,0", "{csv}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn compare_rejects_large_radius() {
    let out = bin()
        .args([
            "compare", "--host", "complete:50", "--dist", "3:1", "--radius", "5", "--out",
        ])
        .arg(tmp("cmp5"))
        .output()
        .unwrap();
    assert!(!out.status.success());
}
