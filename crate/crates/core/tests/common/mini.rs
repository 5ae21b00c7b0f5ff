//! The hand-traced mini-corpus in `tests/fixtures/mini_corpus`.
//!
//! `manifest.json` lists full file contents per revision; hunks are derived
//! here. `expected.json` holds the label trace worked out by hand.

use std::collections::BTreeMap;
use std::path::PathBuf;

use mcr_graph::corpus::{
    unified_diff_between, FileRevision, PullRequest, ReviewComment, ReviewCorpus,
};
use serde::Deserialize;
use serde_json::Value;

pub fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mini_corpus")
}

#[derive(Deserialize)]
struct Manifest {
    pull_requests: Vec<ManifestPr>,
}

#[derive(Deserialize)]
struct ManifestPr {
    id: String,
    repo: String,
    created_at: chrono::DateTime<chrono::Utc>,
    merged: bool,
    files: BTreeMap<String, Vec<String>>,
    comments: Vec<Value>,
}

pub fn corpus() -> ReviewCorpus {
    let text = std::fs::read_to_string(dir().join("manifest.json")).unwrap();
    let m: Manifest = serde_json::from_str(&text).unwrap();
    let pull_requests = m
        .pull_requests
        .into_iter()
        .map(|p| {
            let mut revisions = Vec::new();
            for (path, contents) in &p.files {
                for (i, content) in contents.iter().enumerate() {
                    let hunks = if i == 0 {
                        Vec::new()
                    } else {
                        unified_diff_between(&contents[i - 1], content).unwrap()
                    };
                    revisions.push(FileRevision {
                        pr_id: p.id.clone(),
                        file_path: path.clone(),
                        revision_index: i as u32,
                        content: content.clone(),
                        hunks,
                    });
                }
            }
            let comments = p
                .comments
                .into_iter()
                .map(|mut c| {
                    c["pr_id"] = Value::String(p.id.clone());
                    serde_json::from_value::<ReviewComment>(c).unwrap()
                })
                .collect();
            PullRequest {
                id: p.id,
                repo: p.repo,
                created_at: p.created_at,
                merged: p.merged,
                revisions,
                comments,
            }
        })
        .collect();
    ReviewCorpus {
        pull_requests,
        ..ReviewCorpus::default()
    }
}

#[derive(Deserialize)]
pub struct ExpectedRevision {
    pub pr: String,
    pub file: String,
    pub rev: u32,
    pub changed: Vec<u32>,
    pub positive: BTreeMap<usize, String>,
    pub negative: BTreeMap<u32, Vec<usize>>,
}

#[derive(Deserialize)]
pub struct ExpectedQuality {
    pub actionability: u8,
    pub replies: usize,
}

#[derive(Deserialize)]
pub struct SkippedFile {
    pub pr: String,
    pub file: String,
    pub rev: u32,
}

#[derive(Deserialize)]
pub struct Expected {
    pub windows: Vec<u32>,
    pub revisions: Vec<ExpectedRevision>,
    pub skipped: Vec<SkippedFile>,
    pub quality: BTreeMap<String, ExpectedQuality>,
}

pub fn expected() -> Expected {
    serde_json::from_str(&std::fs::read_to_string(dir().join("expected.json")).unwrap()).unwrap()
}

/// Brute-force actionability: follows `lines` (1-based, in revision
/// `from`) through every later revision with a fresh line diff and reports
/// whether any of them is rewritten or split by inserted lines.
pub fn edited_later(contents: &[String], from: usize, lines: &[u32]) -> bool {
    let mut tracked: Vec<usize> = lines.iter().map(|&l| l as usize - 1).collect();
    for w in contents[from..].windows(2) {
        let diff = similar::TextDiff::from_lines(&w[0], &w[1]);
        let mut map = BTreeMap::new();
        for op in diff.ops() {
            if let similar::DiffOp::Equal {
                old_index,
                new_index,
                len,
            } = *op
            {
                for k in 0..len {
                    map.insert(old_index + k, new_index + k);
                }
            }
        }
        let mut next = Vec::with_capacity(tracked.len());
        for &l in &tracked {
            match map.get(&l) {
                Some(&n) => next.push(n),
                None => return true,
            }
        }
        // Consecutive old lines must stay consecutive.
        for (a, b) in tracked
            .iter()
            .zip(&next)
            .collect::<Vec<_>>()
            .windows(2)
            .map(|p| (p[0], p[1]))
        {
            if b.0 - a.0 == 1 && b.1 - a.1 != 1 {
                return true;
            }
        }
        tracked = next;
    }
    false
}

/// Revision contents of one file of a corpus PR.
pub fn contents(corpus: &ReviewCorpus, pr: &str, file: &str) -> Vec<String> {
    corpus
        .pull_request(pr)
        .unwrap()
        .file_revisions(file)
        .iter()
        .map(|r| r.content.clone())
        .collect()
}

/// Every disagreement between the labeler and the hand trace, plus any
/// revision where a larger window gains a NEGATIVE node.
pub fn label_mismatches(corpus: &ReviewCorpus, exp: &Expected) -> Vec<String> {
    use mcr_graph::corpus::changed_lines;
    use mcr_graph::labeling::{build_labeled_dataset, Commented};

    let mut bad = Vec::new();
    let mut negatives: BTreeMap<(String, String, u32), Vec<(u32, Vec<usize>)>> = BTreeMap::new();
    for &w in &exp.windows {
        let ds = build_labeled_dataset(corpus, w, |_| true).unwrap();
        if ds.graphs.len() != exp.revisions.len() {
            bad.push(format!(
                "W={w}: {} graphs, trace has {}",
                ds.graphs.len(),
                exp.revisions.len()
            ));
        }
        let skipped: Vec<(&str, &str, u32)> = ds
            .skipped
            .iter()
            .map(|s| (s.pr_id.as_str(), s.file_path.as_str(), s.revision_index))
            .collect();
        let want: Vec<(&str, &str, u32)> = exp
            .skipped
            .iter()
            .map(|s| (s.pr.as_str(), s.file.as_str(), s.rev))
            .collect();
        if skipped != want {
            bad.push(format!("W={w}: skipped {skipped:?}, trace {want:?}"));
        }
        for e in &exp.revisions {
            let tag = format!("W={w} {}:{}@{}", e.pr, e.file, e.rev);
            let Some(lg) = ds.graphs.iter().find(|g| {
                g.provenance.pr_id == e.pr
                    && g.provenance.file_path == e.file
                    && g.provenance.revision_index == e.rev
            }) else {
                bad.push(format!("{tag}: not labeled"));
                continue;
            };
            let rev = corpus
                .pull_request(&e.pr)
                .unwrap()
                .revision(&e.file, e.rev)
                .unwrap();
            let changed: Vec<u32> = changed_lines(rev).into_iter().collect();
            if changed != e.changed {
                bad.push(format!(
                    "{tag}: changed lines {changed:?}, trace {:?}",
                    e.changed
                ));
            }
            let pos: BTreeMap<usize, String> = lg
                .labels
                .iter()
                .filter(|l| l.commented == Commented::Positive)
                .map(|l| (l.node_id, l.topic.map_or("-", |t| t.name()).to_string()))
                .collect();
            if pos != e.positive {
                bad.push(format!("{tag}: positive {pos:?}, trace {:?}", e.positive));
            }
            let neg = lg.ids_with(Commented::Negative);
            let want_neg = e.negative.get(&w).cloned().unwrap_or_default();
            if neg != want_neg {
                bad.push(format!("{tag}: negative {neg:?}, trace {want_neg:?}"));
            }
            if lg.labels.len() != lg.graph.nodes.len() {
                bad.push(format!(
                    "{tag}: {} labels for {} nodes",
                    lg.labels.len(),
                    lg.graph.nodes.len()
                ));
            }
            negatives
                .entry((e.pr.clone(), e.file.clone(), e.rev))
                .or_default()
                .push((w, neg));
        }
    }
    for (key, per_w) in &negatives {
        for pair in per_w.windows(2) {
            let (w0, small) = (&pair[0].0, &pair[0].1);
            let (w1, large) = (&pair[1].0, &pair[1].1);
            if let Some(x) = large.iter().find(|x| !small.contains(x)) {
                bad.push(format!(
                    "{key:?}: node {x} NEGATIVE at W={w1} but not at W={w0}"
                ));
            }
        }
    }
    bad
}

/// Quality labels against the trace, the clarity formula, and the
/// brute-force actionability scan.
pub fn quality_mismatches(corpus: &ReviewCorpus, exp: &Expected) -> Vec<String> {
    use mcr_graph::astgraph::parse_source;
    use mcr_graph::corpus::changed_lines;
    use mcr_graph::labeling::{anchor_comment, quality_labels};

    let mut bad = Vec::new();
    let mut seen = 0;
    for pr in &corpus.pull_requests {
        for c in &pr.comments {
            seen += 1;
            let q = quality_labels(pr, c).unwrap();
            let Some(want) = exp.quality.get(&c.id) else {
                bad.push(format!("{}: not in trace", c.id));
                continue;
            };
            if q.clarity != 1.0 / (1.0 + want.replies as f64) {
                bad.push(format!(
                    "{}: clarity {} for {} replies",
                    c.id, q.clarity, want.replies
                ));
            }
            if q.actionability != want.actionability {
                bad.push(format!(
                    "{}: actionability {}, trace {}",
                    c.id, q.actionability, want.actionability
                ));
            }
            let rev = pr.revision(&c.file_path, c.revision_index).unwrap();
            let g = parse_source(&rev.content).unwrap();
            let span = g.nodes[anchor_comment(&g, c, &changed_lines(rev)).unwrap()].span;
            let lines: Vec<u32> = (span.line_start..=span.line_end).collect();
            let brute = u8::from(edited_later(
                &contents(corpus, &pr.id, &c.file_path),
                c.revision_index as usize,
                &lines,
            ));
            if q.actionability != brute {
                bad.push(format!(
                    "{}: actionability {}, brute-force scan {brute}",
                    c.id, q.actionability
                ));
            }
        }
    }
    if seen != exp.quality.len() {
        bad.push(format!("{seen} comments, trace has {}", exp.quality.len()));
    }
    bad
}
