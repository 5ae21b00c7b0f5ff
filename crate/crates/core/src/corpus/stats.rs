use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ReviewCorpus;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_prs: usize,
    pub n_comments: usize,
    pub n_revisions: usize,
    pub n_threads: usize,
    /// comments-per-PR → number of PRs with that many comments
    pub comments_per_pr_histogram: BTreeMap<usize, usize>,
}

pub fn corpus_stats(corpus: &ReviewCorpus) -> CorpusStats {
    let mut stats = CorpusStats {
        n_prs: corpus.pull_requests.len(),
        ..CorpusStats::default()
    };
    for pr in &corpus.pull_requests {
        stats.n_comments += pr.comments.len();
        stats.n_revisions += pr.revisions.len();
        let threads: BTreeSet<&str> = pr.comments.iter().map(|c| c.thread_id.as_str()).collect();
        stats.n_threads += threads.len();
        *stats
            .comments_per_pr_histogram
            .entry(pr.comments.len())
            .or_default() += 1;
    }
    stats
}
