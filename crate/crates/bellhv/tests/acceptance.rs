//! The acceptance gate: runs every verification criterion at the default
//! seed, prints one pass/fail line per criterion, and fails if any criterion
//! fails. Criterion 10 (reproducibility across worker counts) is exercised
//! end to end by spawning the CLI binary.

use std::process::Command;

use bellhv::verify::{run_all, CriterionResult};

#[test]
fn acceptance_criteria() {
    let results = run_all(42, false);
    for r in &results {
        println!("{}", r.line());
    }
    let failures: Vec<&CriterionResult> = results.iter().filter(|r| !r.pass).collect();
    assert!(
        failures.is_empty(),
        "{} criteria failed: {}",
        failures.len(),
        failures
            .iter()
            .map(|r| r.name)
            .collect::<Vec<_>>()
            .join(", ")
    );
}

fn verify_stdout(workers: &str) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_bellhv"))
        .args(["verify", "--seed", "42", "--workers", workers])
        .output()
        .expect("spawning the binary failed");
    assert!(
        out.status.success(),
        "verify --workers {workers} exited with {:?}:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout)
    );
    out.stdout
}

#[test]
fn criterion_10_reports_are_byte_identical_across_worker_counts() {
    let one = verify_stdout("1");
    let eight = verify_stdout("8");
    assert!(!one.is_empty());
    assert_eq!(
        one,
        eight,
        "reports differ:\n--- workers=1 ---\n{}\n--- workers=8 ---\n{}",
        String::from_utf8_lossy(&one),
        String::from_utf8_lossy(&eight)
    );
    let text = String::from_utf8(one).unwrap();
    assert!(text.contains("verify: 10/10 criteria passed"));
}
