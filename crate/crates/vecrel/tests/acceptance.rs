//! Acceptance suite: the twelve exact checks at full sample counts, one
//! report line each, with wall-clock limits on the timed checks.

use std::io::Write;
use std::time::Duration;

use vecrel::invariants::{run_check, Effort, N_CHECKS};

const SEED: u64 = 20_240_101;

/// Wall-clock limit for a check, if it has one.
fn limit(id: usize) -> Option<Duration> {
    match id {
        1 | 2 => Some(Duration::from_secs(10)),
        9 => Some(Duration::from_secs(60)),
        _ => None,
    }
}

#[test]
fn acceptance() {
    let mut failures = 0;
    for id in 1..=N_CHECKS {
        let r = run_check(id, SEED, Effort::Full);
        let late = limit(id).filter(|&l| r.elapsed >= l);
        let passed = r.passed && late.is_none();
        let mut detail = r.detail.clone();
        if let Some(l) = late {
            detail = format!("{detail}; took {:?}, limit {l:?}", r.elapsed);
        }
        // Written to the process stdout directly so the report is visible
        // without `--nocapture`.
        let line = format!("{} criterion {id}: {} ({detail}) [{:.2?}]", if passed { "PASS" } else { "FAIL" }, r.name, r.elapsed);
        writeln!(std::io::stdout().lock(), "{line}").expect("stdout is writable");
        if !passed {
            failures += 1;
        }
    }
    assert_eq!(failures, 0, "{failures} acceptance criteria failed");
}
