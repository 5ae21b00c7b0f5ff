use std::collections::HashMap;
use std::sync::Arc;

use super::model::Task;
use super::train::{CommentExample, NodeExample};
use super::Result;
use crate::astgraph::{parse_source, AstGraph};
use crate::corpus::{changed_lines, ReviewCorpus};
use crate::labeling::{anchor_comment, quality_labels, Commented, LabelError, LabeledGraph};
use crate::textrep::tokenize;

/// Per-node training targets; `None` is masked out.
///
/// LIKELIHOOD: POSITIVE -> 1, NEGATIVE -> 0. TOPIC: the meta-topic index of
/// POSITIVE nodes.
pub fn node_targets(graph: &LabeledGraph, task: Task) -> Vec<Option<usize>> {
    let mut out = vec![None; graph.graph.nodes.len()];
    for l in &graph.labels {
        out[l.node_id] = match (task, l.commented) {
            (Task::Likelihood, Commented::Positive) => Some(1),
            (Task::Likelihood, Commented::Negative) => Some(0),
            (Task::Topic, Commented::Positive) => l.topic.map(|t| t.index()),
            _ => None,
        };
    }
    out
}

pub fn node_examples(graphs: &[LabeledGraph], task: Task) -> Vec<NodeExample> {
    graphs
        .iter()
        .map(|g| NodeExample {
            pr_id: g.provenance.pr_id.clone(),
            graph: g.graph.clone(),
            targets: node_targets(g, task),
        })
        .collect()
}

/// One QUALITY example per comment of the selected pull requests whose
/// revision parses. Comments on unparseable revisions are skipped.
pub fn comment_examples(
    corpus: &ReviewCorpus,
    include_pr: impl Fn(&str) -> bool,
) -> Result<Vec<CommentExample>> {
    let mut out = Vec::new();
    for pr in corpus.pull_requests.iter().filter(|p| include_pr(&p.id)) {
        let mut graphs: HashMap<(&str, u32), Option<Arc<AstGraph>>> = HashMap::new();
        for c in &pr.comments {
            let Some(rev) = pr.revision(&c.file_path, c.revision_index) else {
                continue;
            };
            let graph = graphs
                .entry((c.file_path.as_str(), c.revision_index))
                .or_insert_with(|| match parse_source(&rev.content) {
                    Ok(g) => Some(Arc::new(g.with_origin(&c.file_path, c.revision_index))),
                    Err(e) => {
                        log::warn!(
                            "skipping comments on {}:{}@{}: {e}",
                            pr.id,
                            c.file_path,
                            c.revision_index
                        );
                        None
                    }
                })
                .clone();
            let Some(graph) = graph else { continue };
            let node_id =
                anchor_comment(&graph, c, &changed_lines(rev)).map_err(LabelError::from)?;
            let q = quality_labels(pr, c)?;
            out.push(CommentExample {
                pr_id: pr.id.clone(),
                comment_id: c.id.clone(),
                graph,
                node_id,
                tokens: tokenize(&c.body),
                actionability: f64::from(q.actionability),
                clarity: q.clarity,
            });
        }
    }
    Ok(out)
}
