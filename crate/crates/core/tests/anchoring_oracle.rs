mod common;

use common::oracles::anchoring_mismatches;

#[test]
fn cover_and_anchor_match_exhaustive_search() {
    let (checked, bad) = anchoring_mismatches(3, 100, 10);
    assert_eq!(checked, 1000);
    assert!(bad.is_empty(), "{}", bad.join("\n"));
}

#[test]
fn other_seeds_agree_too() {
    for seed in [4, 5] {
        let (_, bad) = anchoring_mismatches(seed, 30, 10);
        assert!(bad.is_empty(), "seed {seed}: {}", bad.join("\n"));
    }
}
