use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

const BUDGET: Duration = Duration::from_secs(600);

/// Criterion 17: the self-test finishes inside the budget and exits 0.
#[test]
fn criterion_17_selftest_exits_cleanly() {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_hybridqm"))
        .arg("selftest")
        .output()
        .unwrap();
    let elapsed = start.elapsed();
    let stdout = String::from_utf8_lossy(&out.stdout);
    let _ = write!(std::io::stderr(), "{stdout}");
    let pass = out.status.code() == Some(0) && elapsed <= BUDGET;
    let _ = writeln!(
        std::io::stderr(),
        "17  {}  {:<36} exit {:?} in {:.1} s",
        if pass { "PASS" } else { "FAIL" },
        "Self-test exit status",
        out.status.code(),
        elapsed.as_secs_f64()
    );
    assert!(pass, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn selftest_table_is_deterministic() {
    let lines = || {
        let out = Command::new(env!("CARGO_BIN_EXE_hybridqm"))
            .arg("selftest")
            .output()
            .unwrap();
        String::from_utf8(out.stdout).unwrap()
    };
    let first = lines();
    assert_eq!(first.lines().count(), 17);
    assert_eq!(first, lines());
}
