//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. Criterion 9 spawns the built binary twice and compares output
//! trees byte for byte.

use rdcp_cli::accept;

const SEED: u64 = 42;

fn check(criterion: usize, rows: Vec<accept::CritRow>) {
    let mut all = true;
    for row in &rows {
        if !row.pass {
            eprintln!(
                "criterion {criterion} FAILED: [{}] {} = {} (want {})",
                row.params, row.metric, row.value, row.tolerance
            );
        }
        all &= row.pass;
    }
    println!("[criterion {criterion}] {}", if all { "PASS" } else { "FAIL" });
    assert!(all, "criterion {criterion} failed");
}

#[test]
fn criterion_1_ode_sanity() {
    check(1, accept::criterion1());
}

#[test]
fn criterion_2_taylor_oracle() {
    check(2, accept::criterion2());
}

#[test]
fn criterion_3_exploration_equals_simulation() {
    check(3, accept::criterion3(SEED));
}

#[test]
fn criterion_4_two_sampler_law_equality() {
    check(4, accept::criterion4(SEED));
}

#[test]
fn criterion_5_local_limit_at_finite_n() {
    check(5, accept::criterion5(SEED));
}

#[test]
fn criterion_6_spectral_equals_ode_criticality() {
    check(6, accept::criterion6());
}

#[test]
fn criterion_7_critical_time_asymptotics() {
    check(7, accept::criterion7());
}

#[test]
fn criterion_8_phase_transition_bracketing() {
    check(8, accept::criterion8(SEED, 4));
}

#[test]
fn criterion_9_selftest_determinism() {
    let bin = env!("CARGO_BIN_EXE_rdcp");
    let base = std::env::temp_dir().join(format!("rdcp-accept-{}", std::process::id()));
    let dirs = [base.join("run1"), base.join("run2")];
    for dir in &dirs {
        let status = std::process::Command::new(bin)
            .args(["selftest", "--seed", "42", "--out"])
            .arg(dir)
            .status()
            .expect("selftest run");
        assert!(status.success(), "selftest exited nonzero");
    }
    let mut names: Vec<Vec<String>> = Vec::new();
    for dir in &dirs {
        let mut entries: Vec<String> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        entries.sort();
        names.push(entries);
    }
    assert_eq!(names[0], names[1], "output trees differ in file names");
    assert!(!names[0].is_empty(), "selftest produced no files");
    for name in &names[0] {
        let a = std::fs::read(dirs[0].join(name)).unwrap();
        let b = std::fs::read(dirs[1].join(name)).unwrap();
        assert_eq!(a, b, "file {name} differs between identical runs");
    }
    std::fs::remove_dir_all(&base).ok();
    println!("[criterion 9] PASS");
}
