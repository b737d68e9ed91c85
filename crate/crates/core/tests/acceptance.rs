//! Acceptance gate: one line per criterion, non-zero exit on failure.

use isoflow::acceptance::{overall_pass, run_all, Status};

fn main() {
    let results = run_all();
    println!("acceptance criteria");
    for r in &results {
        println!("{}", r.line());
    }
    let failed: Vec<u8> = results
        .iter()
        .filter(|r| r.status == Status::Fail)
        .map(|r| r.id)
        .collect();
    let known: Vec<u8> = results
        .iter()
        .filter(|r| r.status == Status::KnownDeviation)
        .map(|r| r.id)
        .collect();
    if !known.is_empty() {
        println!("known deviations (documented): {known:?}");
    }
    if overall_pass(&results) {
        println!("acceptance: PASS");
    } else {
        println!("acceptance: FAIL {failed:?}");
        std::process::exit(1);
    }
}
