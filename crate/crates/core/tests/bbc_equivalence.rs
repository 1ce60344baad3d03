mod support;

use std::time::Instant;

use support::bbc_oracle::check_equivalence;

#[test]
fn matches_oracle_on_small_shapes() {
    let started = Instant::now();
    let r = check_equivalence(2, 0);
    assert!(r.cases > 1000, "{} cases", r.cases);
    assert_eq!(r.mismatches, 0, "{}", r.first_mismatch.unwrap_or_default());
    eprintln!("{} shapes, {} cases in {:?}", r.shapes, r.cases, started.elapsed());
}
