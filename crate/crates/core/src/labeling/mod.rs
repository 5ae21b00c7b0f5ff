//! Ground-truth construction: anchoring review comments onto AST nodes,
//! POSITIVE/NEGATIVE/UNKNOWN node labels from the stability heuristic,
//! keyword meta-topics, comment quality targets and PR-granular splits.

mod dataset;
mod split;
mod topics;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::astgraph::{node_span_cover, parse_source, AstError, AstGraph};
use crate::corpus::{
    changed_lines, map_lines_between, stability_horizon, CorpusError, LineSet, PullRequest,
    ReviewComment,
};

pub use dataset::{build_labeled_dataset, LabeledDataset, SkippedRevision};
pub use split::{check_no_leakage, split_dataset, split_fraction, DatasetSplit};
pub use topics::{weak_topic_label, TOPIC_KEYWORDS};

/// Default stability window, in revisions.
pub const DEFAULT_STABILITY_WINDOW: u32 = 2;

#[derive(Debug, Error)]
pub enum LabelError {
    #[error(
        "graph `{file_path}` revision {revision_index} is not a revision of pull request `{pr_id}`"
    )]
    RevisionMismatch {
        pr_id: String,
        file_path: String,
        revision_index: u32,
    },
    #[error("stability window must be at least 1")]
    InvalidWindow,
    #[error(transparent)]
    Ast(#[from] AstError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

pub type Result<T> = std::result::Result<T, LabelError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MetaTopic {
    Style,
    Structure,
    Bug,
    Usecase,
    Other,
}

impl MetaTopic {
    pub const COUNT: usize = 5;
    pub const ALL: [MetaTopic; Self::COUNT] = [
        MetaTopic::Style,
        MetaTopic::Structure,
        MetaTopic::Bug,
        MetaTopic::Usecase,
        MetaTopic::Other,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            MetaTopic::Style => "STYLE",
            MetaTopic::Structure => "STRUCTURE",
            MetaTopic::Bug => "BUG",
            MetaTopic::Usecase => "USECASE",
            MetaTopic::Other => "OTHER",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Commented {
    Positive,
    Negative,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeLabel {
    pub node_id: usize,
    pub commented: Commented,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<MetaTopic>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub pr_id: String,
    pub file_path: String,
    pub revision_index: u32,
    pub stability_window: u32,
    /// Stability is judged on the revisions inside the pull request only.
    pub stability_scope: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledGraph {
    pub graph: AstGraph,
    pub labels: Vec<NodeLabel>,
    pub provenance: Provenance,
}

impl LabeledGraph {
    pub fn ids_with(&self, commented: Commented) -> Vec<usize> {
        self.labels
            .iter()
            .filter(|l| l.commented == commented)
            .map(|l| l.node_id)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityLabel {
    pub comment_id: String,
    pub actionability: u8,
    pub clarity: f64,
}

/// Anchors a comment to the smallest AST node covering the part of its line
/// range that was changed in this revision, falling back to the raw range
/// when the comment sits on unchanged lines only.
pub fn anchor_comment(
    graph: &AstGraph,
    comment: &ReviewComment,
    changed: &LineSet,
) -> std::result::Result<usize, AstError> {
    let hit: Vec<u32> = changed
        .range(comment.line_start..=comment.line_end)
        .copied()
        .collect();
    match (hit.first(), hit.last()) {
        (Some(&a), Some(&b)) => node_span_cover(graph, a, b),
        _ => node_span_cover(graph, comment.line_start, comment.line_end),
    }
}

fn check_revision<'a>(
    graph: &AstGraph,
    pr: &'a PullRequest,
) -> Result<&'a crate::corpus::FileRevision> {
    pr.revision(&graph.file_path, graph.revision_index)
        .ok_or_else(|| LabelError::RevisionMismatch {
            pr_id: pr.id.clone(),
            file_path: graph.file_path.clone(),
            revision_index: graph.revision_index,
        })
}

/// Line range of the node a comment anchors to, in its own revision. Falls
/// back to the raw comment range when that revision does not parse.
fn anchored_lines(
    pr: &PullRequest,
    comment: &ReviewComment,
    cache: &mut GraphCache,
) -> Result<(u32, u32)> {
    let rev = pr
        .revision(&comment.file_path, comment.revision_index)
        .ok_or_else(|| LabelError::RevisionMismatch {
            pr_id: pr.id.clone(),
            file_path: comment.file_path.clone(),
            revision_index: comment.revision_index,
        })?;
    match cache.get(pr, &comment.file_path, comment.revision_index) {
        Some(g) => {
            let id = anchor_comment(g, comment, &changed_lines(rev))?;
            let span = g.nodes[id].span;
            Ok((span.line_start, span.line_end))
        }
        None => Ok((comment.line_start, comment.line_end)),
    }
}

/// Parsed revisions of one pull request, keyed by (file, revision).
#[derive(Default)]
struct GraphCache {
    graphs: BTreeMap<(String, u32), Option<AstGraph>>,
}

impl GraphCache {
    fn get(&mut self, pr: &PullRequest, file_path: &str, revision_index: u32) -> Option<&AstGraph> {
        self.graphs
            .entry((file_path.to_string(), revision_index))
            .or_insert_with(|| {
                pr.revision(file_path, revision_index)
                    .and_then(|r| parse_source(&r.content).ok())
                    .map(|g| g.with_origin(file_path, revision_index))
            })
            .as_ref()
    }
}

/// Labels every node of `graph`:
///
/// * POSITIVE: the anchor node of each comment on this revision, with the
///   earliest such comment's meta-topic.
/// * NEGATIVE: nodes overlapping the revision's changed lines, with no
///   comment of the PR (on any revision of the file, mapped into this one)
///   anchored inside their line span, whose span lines then stay unedited
///   for `min(window, remaining revisions)` revisions.
/// * UNKNOWN: everything else.
pub fn label_graph(
    graph: &AstGraph,
    comments: &[ReviewComment],
    pr: &PullRequest,
    window: u32,
) -> Result<LabeledGraph> {
    if window == 0 {
        return Err(LabelError::InvalidWindow);
    }
    let rev = check_revision(graph, pr)?;
    let changed = changed_lines(rev);
    let file_revs = pr.file_revisions(&graph.file_path);
    let last = file_revs.last().map_or(0, |r| r.revision_index);
    let remaining = last - graph.revision_index;
    let required = window.min(remaining);

    let mut positive: BTreeMap<usize, (chrono::DateTime<chrono::Utc>, String, MetaTopic)> =
        BTreeMap::new();
    for c in comments
        .iter()
        .filter(|c| c.file_path == graph.file_path && c.revision_index == graph.revision_index)
    {
        let id = anchor_comment(graph, c, &changed)?;
        let topic = c
            .topic_override
            .unwrap_or_else(|| weak_topic_label(&c.body));
        let key = (c.created_at, c.id.clone(), topic);
        positive
            .entry(id)
            .and_modify(|cur| {
                if (key.0, &key.1) < (cur.0, &cur.1) {
                    *cur = key.clone();
                }
            })
            .or_insert(key);
    }

    // Anchored line ranges of every comment on this file, mapped into this
    // revision's coordinates.
    let mut cache = GraphCache::default();
    cache.graphs.insert(
        (graph.file_path.clone(), graph.revision_index),
        Some(graph.clone()),
    );
    let mut anchored_here: Vec<(u32, u32)> = Vec::new();
    for c in pr
        .comments
        .iter()
        .filter(|c| c.file_path == graph.file_path)
    {
        let (a, b) = anchored_lines(pr, c, &mut cache)?;
        let lines: LineSet = (a..=b).collect();
        let mapped = map_lines_between(
            pr,
            &graph.file_path,
            &lines,
            c.revision_index,
            graph.revision_index,
        )?;
        if let (Some(&lo), Some(&hi)) = (mapped.first(), mapped.last()) {
            anchored_here.push((lo, hi));
        }
    }

    let mut labels = Vec::with_capacity(graph.nodes.len());
    for node in &graph.nodes {
        let span = node.span;
        let label = if let Some((_, _, topic)) = positive.get(&node.id) {
            NodeLabel {
                node_id: node.id,
                commented: Commented::Positive,
                topic: Some(*topic),
            }
        } else {
            let touches_change = changed
                .range(span.line_start..=span.line_end)
                .next()
                .is_some();
            let commented_inside = anchored_here
                .iter()
                .any(|&(lo, hi)| span.line_start <= lo && hi <= span.line_end);
            let negative = touches_change
                && !commented_inside
                && stability_horizon(pr, &graph.file_path, &span.lines(), graph.revision_index)?
                    >= required;
            NodeLabel {
                node_id: node.id,
                commented: if negative {
                    Commented::Negative
                } else {
                    Commented::Unknown
                },
                topic: None,
            }
        };
        labels.push(label);
    }

    Ok(LabeledGraph {
        graph: graph.clone(),
        labels,
        provenance: Provenance {
            pr_id: pr.id.clone(),
            file_path: graph.file_path.clone(),
            revision_index: graph.revision_index,
            stability_window: window,
            stability_scope: "within_pr".to_string(),
        },
    })
}

/// Actionability: whether any later revision edits the anchored node's
/// lines. Clarity: `1/(1+k)` for `k` later comments in the same thread.
pub fn quality_labels(pr: &PullRequest, comment: &ReviewComment) -> Result<QualityLabel> {
    if comment.pr_id != pr.id {
        return Err(LabelError::RevisionMismatch {
            pr_id: pr.id.clone(),
            file_path: comment.file_path.clone(),
            revision_index: comment.revision_index,
        });
    }
    let mut cache = GraphCache::default();
    let (a, b) = anchored_lines(pr, comment, &mut cache)?;
    let lines: LineSet = (a..=b).collect();
    let revs = pr.file_revisions(&comment.file_path);
    let remaining = revs
        .iter()
        .filter(|r| r.revision_index > comment.revision_index)
        .count() as u32;
    let horizon = stability_horizon(pr, &comment.file_path, &lines, comment.revision_index)?;
    let replies = pr
        .comments
        .iter()
        .filter(|c| c.thread_id == comment.thread_id && c.created_at > comment.created_at)
        .count();
    Ok(QualityLabel {
        comment_id: comment.id.clone(),
        actionability: u8::from(horizon < remaining),
        clarity: clarity_from_replies(replies),
    })
}

pub fn clarity_from_replies(replies: usize) -> f64 {
    1.0 / (1.0 + replies as f64)
}
