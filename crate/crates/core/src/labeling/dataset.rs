use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{label_graph, LabeledGraph, Result};
use crate::astgraph::parse_source;
use crate::corpus::ReviewCorpus;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRevision {
    pub pr_id: String,
    pub file_path: String,
    pub revision_index: u32,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct LabeledDataset {
    pub graphs: Vec<LabeledGraph>,
    /// Revisions that failed to parse; never half-labeled.
    pub skipped: Vec<SkippedRevision>,
}

/// Labels every parseable file revision of the selected pull requests.
/// Output order is PR order, then file order, then revision index, whatever
/// the degree of parallelism.
pub fn build_labeled_dataset(
    corpus: &ReviewCorpus,
    window: u32,
    include_pr: impl Fn(&str) -> bool + Sync,
) -> Result<LabeledDataset> {
    let per_pr: Vec<Result<LabeledDataset>> = corpus
        .pull_requests
        .par_iter()
        .filter(|pr| include_pr(&pr.id))
        .map(|pr| {
            let mut out = LabeledDataset::default();
            for path in pr.file_paths() {
                for rev in pr.file_revisions(path) {
                    match parse_source(&rev.content) {
                        Ok(g) => {
                            let g = g.with_origin(path, rev.revision_index);
                            let comments: Vec<_> =
                                pr.comments_on(path, rev.revision_index).cloned().collect();
                            out.graphs.push(label_graph(&g, &comments, pr, window)?);
                        }
                        Err(e) => {
                            log::warn!("skipping {}:{}@{}: {e}", pr.id, path, rev.revision_index);
                            out.skipped.push(SkippedRevision {
                                pr_id: pr.id.clone(),
                                file_path: path.to_string(),
                                revision_index: rev.revision_index,
                                reason: e.to_string(),
                            });
                        }
                    }
                }
            }
            Ok(out)
        })
        .collect();

    let mut all = LabeledDataset::default();
    for part in per_pr {
        let part = part?;
        all.graphs.extend(part.graphs);
        all.skipped.extend(part.skipped);
    }
    Ok(all)
}
