mod common;

use std::time::Instant;

use common::random::{check_against_oracle, Check};

#[test]
fn planner_matches_exhaustive_oracle_on_random_instances() {
    let started = Instant::now();
    let mut solved = 0;
    let mut failures = Vec::new();
    for seed in 10_000..10_100 {
        match check_against_oracle(seed) {
            Ok(Check::Solved { .. }) => solved += 1,
            Ok(Check::Unsolvable) => {}
            Err(e) => failures.push(e),
        }
    }
    assert!(failures.is_empty(), "{} mismatches:\n{}", failures.len(), failures.join("\n"));
    assert!(solved >= 60, "only {solved} of 100 instances were solvable");
    assert!(started.elapsed().as_secs() < 60, "took {:?}", started.elapsed());
}
