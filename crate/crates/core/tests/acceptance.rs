//! Acceptance criteria A1 to A9. Prints one line per criterion and exits
//! nonzero when any hard criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use undergrad::harness::{criterion, VerifyOptions, CRITERIA};

fn main() -> ExitCode {
    // libtest-style flags (e.g. --nocapture) are accepted and ignored; bare
    // arguments filter criteria by id.
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let opts = VerifyOptions::default();
    let mut hard_failures = 0;
    let mut ran = 0;
    for id in CRITERIA {
        if !filters.is_empty() && !filters.iter().any(|f| id.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = criterion(id, &opts);
        ran += 1;
        if !result.passed && !result.soft {
            hard_failures += 1;
        }
        println!("{result} ({:.2}s)", start.elapsed().as_secs_f64());
    }
    println!("acceptance: {ran} criteria, {hard_failures} hard failures");
    if hard_failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
