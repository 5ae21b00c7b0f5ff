use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{EvalError, Result};
use crate::astgraph::AstGraph;
use crate::corpus::split_lines;
use crate::graphlearn::{node_probabilities, Model, Task};
use crate::labeling::{Commented, LabeledGraph, MetaTopic};

/// Scores of one AST node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub pr_id: String,
    pub file_path: String,
    pub revision_index: u32,
    pub node_id: usize,
    pub kind: crate::astgraph::NodeKind,
    pub line_start: u32,
    pub line_end: u32,
    /// Probability that the node draws a review comment.
    pub likelihood: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topic: Option<MetaTopic>,
    /// Softmax over the five meta-topics, in their canonical order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub topic_scores: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gold: Option<Commented>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportLine {
    pub line_no: u32,
    pub text: String,
    /// Highest likelihood among nodes whose line span contains the line;
    /// 0 when none does.
    pub score: f64,
    /// Topic of the node that produced `score`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topic: Option<MetaTopic>,
    pub marked: bool,
}

/// Annotated listing of one file revision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub pr_id: String,
    pub file_path: String,
    pub revision_index: u32,
    pub threshold: f64,
    pub lines: Vec<ReportLine>,
    pub records: Vec<PredictionRecord>,
}

/// Scores every node of `graph` and annotates each line of `source`.
/// `labels`, when given, fills the gold field of the records.
pub fn predict_report(
    pr_id: &str,
    graph: &AstGraph,
    source: &str,
    likelihood: &Model,
    topic: Option<&Model>,
    labels: Option<&LabeledGraph>,
    threshold: f64,
) -> Result<ReportDocument> {
    if likelihood.config.task != Task::Likelihood {
        return Err(EvalError::ConfigMismatch(format!(
            "expected a likelihood model, got {}",
            likelihood.config.task.name()
        )));
    }
    if let Some(t) = topic {
        if t.config.task != Task::Topic {
            return Err(EvalError::ConfigMismatch(format!(
                "expected a topic model, got {}",
                t.config.task.name()
            )));
        }
    }
    let (lines, _) = split_lines(source);
    if graph.line_count as usize != lines.len() {
        return Err(EvalError::ConfigMismatch(format!(
            "graph has {} lines, source has {}",
            graph.line_count,
            lines.len()
        )));
    }
    let probs = node_probabilities(likelihood, graph)?;
    let topic_probs = topic.map(|t| node_probabilities(t, graph)).transpose()?;

    let mut records = Vec::with_capacity(graph.nodes.len());
    for node in &graph.nodes {
        let (topic, topic_scores) = match &topic_probs {
            Some(tp) => {
                let row = tp.row(node.id).to_vec();
                let best = (0..row.len()).fold(0, |b, i| if row[i] > row[b] { i } else { b });
                (MetaTopic::from_index(best), row)
            }
            None => (None, Vec::new()),
        };
        records.push(PredictionRecord {
            pr_id: pr_id.to_string(),
            file_path: graph.file_path.clone(),
            revision_index: graph.revision_index,
            node_id: node.id,
            kind: node.kind,
            line_start: node.span.line_start,
            line_end: node.span.line_end,
            likelihood: probs.at(node.id, 1),
            topic,
            topic_scores,
            gold: labels
                .and_then(|l| l.labels.get(node.id))
                .map(|l| l.commented),
        });
    }

    let mut out_lines = Vec::with_capacity(lines.len());
    for (i, text) in lines.iter().enumerate() {
        let line_no = i as u32 + 1;
        // First node in id order wins ties, so the result is stable.
        let best = records
            .iter()
            .filter(|r| r.line_start <= line_no && line_no <= r.line_end)
            .fold(None::<&PredictionRecord>, |b, r| match b {
                Some(b) if b.likelihood >= r.likelihood => Some(b),
                _ => Some(r),
            });
        let score = best.map_or(0.0, |r| r.likelihood);
        out_lines.push(ReportLine {
            line_no,
            text: text.to_string(),
            score,
            topic: best.and_then(|r| r.topic),
            marked: score >= threshold,
        });
    }
    Ok(ReportDocument {
        pr_id: pr_id.to_string(),
        file_path: graph.file_path.clone(),
        revision_index: graph.revision_index,
        threshold,
        lines: out_lines,
        records,
    })
}

impl ReportDocument {
    /// Plain-text listing: line number, marker, score, topic tag, source.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "== {} {} @ revision {} (threshold {:.2})",
            self.pr_id, self.file_path, self.revision_index, self.threshold
        );
        for l in &self.lines {
            let tag = l.topic.map_or("", MetaTopic::name);
            let mark = if l.marked { '*' } else { ' ' };
            let _ = writeln!(
                s,
                "{:>5} {mark} {:.4} {:<9}| {}",
                l.line_no, l.score, tag, l.text
            );
        }
        s
    }
}
