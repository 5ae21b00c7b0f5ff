use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::ReviewCorpus;
use crate::hash::keyed_hash64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train_pr_ids: BTreeSet<String>,
    pub test_pr_ids: BTreeSet<String>,
    pub seed: u64,
    pub ratio: f64,
}

impl DatasetSplit {
    pub fn is_train(&self, pr_id: &str) -> bool {
        self.train_pr_ids.contains(pr_id)
    }

    pub fn is_test(&self, pr_id: &str) -> bool {
        self.test_pr_ids.contains(pr_id)
    }
}

/// Position of a PR in `[0, 1)`, fixed by `(seed, pr_id)` alone.
pub fn split_fraction(seed: u64, pr_id: &str) -> f64 {
    keyed_hash64(seed, pr_id) as f64 / 18_446_744_073_709_551_616.0
}

/// Assigns each PR to train when its hashed position is below `ratio`,
/// otherwise to test. Independent of PR order.
///
/// # Panics
/// When `ratio` is outside `(0, 1)`.
pub fn split_dataset(corpus: &ReviewCorpus, ratio: f64, seed: u64) -> DatasetSplit {
    assert!(
        ratio > 0.0 && ratio < 1.0,
        "split ratio must lie in (0, 1), got {ratio}"
    );
    let mut split = DatasetSplit {
        train_pr_ids: BTreeSet::new(),
        test_pr_ids: BTreeSet::new(),
        seed,
        ratio,
    };
    for pr in &corpus.pull_requests {
        if split_fraction(seed, &pr.id) < ratio {
            split.train_pr_ids.insert(pr.id.clone());
        } else {
            split.test_pr_ids.insert(pr.id.clone());
        }
    }
    split
}

/// Leakage check: the two sides are disjoint and every sample's PR sits on
/// the side it is used for. Returns the first offending PR id.
pub fn check_no_leakage<'a>(
    split: &DatasetSplit,
    train_sample_prs: impl IntoIterator<Item = &'a str>,
    test_sample_prs: impl IntoIterator<Item = &'a str>,
) -> Result<(), String> {
    if let Some(id) = split.train_pr_ids.intersection(&split.test_pr_ids).next() {
        return Err(id.clone());
    }
    for id in train_sample_prs {
        if !split.is_train(id) {
            return Err(id.to_string());
        }
    }
    for id in test_sample_prs {
        if !split.is_test(id) {
            return Err(id.to_string());
        }
    }
    Ok(())
}
