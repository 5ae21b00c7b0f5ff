//! Normalization of offline pull-request review exports into a corpus.
//!
//! The accepted export shape follows the review-comment dumps of common
//! hosting providers; the field mapping is documented in
//! `docs/ingestion.md`.

use std::collections::{BTreeMap, HashMap};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::load::validate_pull_request;
use super::{
    apply_hunks, parse_unified_diff, unified_diff_between, FileRevision, PullRequest,
    ReviewComment, ReviewCorpus, CORPUS_SCHEMA_VERSION,
};
use crate::hash::stable_hash64;
use crate::labeling::MetaTopic;

/// Numeric or textual identifier as found in exports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExportId {
    Num(u64),
    Text(String),
}

impl std::fmt::Display for ExportId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExportId::Num(n) => write!(f, "{n}"),
            ExportId::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportUser {
    pub login: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportPullRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<ExportId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub number: Option<u64>,
    pub repo: String,
    pub created_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub merged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub merged_at: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportFile {
    pub filename: String,
    #[serde(default)]
    pub content: Option<String>,
    /// Unified diff against the file's previous revision, when the export
    /// carries one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patch: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportCommit {
    pub sha: String,
    #[serde(default)]
    pub files: Vec<ExportFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportComment {
    pub id: ExportId,
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub commit_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original_commit_id: Option<String>,
    #[serde(default)]
    pub line: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original_line: Option<u32>,
    #[serde(default)]
    pub start_line: Option<u32>,
    #[serde(default)]
    pub body: String,
    #[serde(default)]
    pub user: Option<ExportUser>,
    pub created_at: DateTime<Utc>,
    #[serde(default)]
    pub in_reply_to_id: Option<ExportId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<MetaTopic>,
}

/// One pull request as exported by a hosting provider.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportDocument {
    pub pull_request: ExportPullRequest,
    #[serde(default)]
    pub commits: Vec<ExportCommit>,
    #[serde(default)]
    pub review_comments: Vec<ExportComment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRecord {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizeOutcome {
    pub corpus: ReviewCorpus,
    /// Records that could not be mapped; each was logged as a warning.
    pub skipped: Vec<SkippedRecord>,
}

/// Salted 64-bit pseudonym of a login. The raw login is never stored.
pub fn pseudonymize(login: &str, salt: &str) -> String {
    let mut buf = Vec::with_capacity(salt.len() + login.len() + 1);
    buf.extend_from_slice(salt.as_bytes());
    buf.push(0xff);
    buf.extend_from_slice(login.as_bytes());
    format!("u{:016x}", stable_hash64(&buf))
}

fn pr_id(pr: &ExportPullRequest) -> Option<String> {
    match (&pr.id, pr.number) {
        (Some(id), _) => Some(id.to_string()),
        (None, Some(n)) => Some(format!("{}#{n}", pr.repo)),
        (None, None) => None,
    }
}

pub fn normalize_export(raw_records: &[ExportDocument], salt: &str) -> NormalizeOutcome {
    let mut skipped = Vec::new();
    let mut pull_requests = Vec::new();
    let skip = |id: String, reason: String, skipped: &mut Vec<SkippedRecord>| {
        log::warn!("skipping unmappable record `{id}`: {reason}");
        skipped.push(SkippedRecord { id, reason });
    };

    for (doc_idx, doc) in raw_records.iter().enumerate() {
        let Some(id) = pr_id(&doc.pull_request) else {
            skip(
                format!("document {doc_idx}"),
                "pull request has neither id nor number".into(),
                &mut skipped,
            );
            continue;
        };
        let mut local = Vec::new();
        let pr = normalize_document(doc, &id, salt, &mut local);
        for s in local {
            skip(s.id, s.reason, &mut skipped);
        }
        match validate_pull_request(&pr, &format!("pr `{id}`")) {
            Ok(()) => pull_requests.push(pr),
            Err(e) => skip(id, e.to_string(), &mut skipped),
        }
    }

    NormalizeOutcome {
        corpus: ReviewCorpus {
            schema_version: CORPUS_SCHEMA_VERSION,
            pull_requests,
        },
        skipped,
    }
}

fn normalize_document(
    doc: &ExportDocument,
    id: &str,
    salt: &str,
    skipped: &mut Vec<SkippedRecord>,
) -> PullRequest {
    // (file, commit position) -> revision index; commit sha -> position.
    let mut revisions: Vec<FileRevision> = Vec::new();
    let mut rev_at_commit: BTreeMap<&str, Vec<(usize, u32)>> = BTreeMap::new();
    let commit_pos: HashMap<&str, usize> = doc
        .commits
        .iter()
        .enumerate()
        .map(|(i, c)| (c.sha.as_str(), i))
        .collect();

    for (pos, commit) in doc.commits.iter().enumerate() {
        for file in &commit.files {
            let Some(content) = &file.content else {
                skipped.push(SkippedRecord {
                    id: format!("{id}:{}@{}", file.filename, commit.sha),
                    reason: "file revision without content".into(),
                });
                continue;
            };
            let history = rev_at_commit.entry(&file.filename).or_default();
            let index = history.len() as u32;
            let prev = revisions
                .iter()
                .rev()
                .find(|r| r.file_path == file.filename)
                .map(|r| r.content.as_str());
            let hunks = match prev {
                None => Vec::new(),
                Some(old) => {
                    let from_patch = file
                        .patch
                        .as_deref()
                        .and_then(|p| parse_unified_diff(p).ok())
                        .filter(|h| apply_hunks(old, h).ok().as_deref() == Some(content.as_str()));
                    match from_patch {
                        Some(h) => h,
                        None => {
                            if file.patch.is_some() {
                                log::warn!(
                                    "patch for `{}` at {} does not reproduce content; recomputing",
                                    file.filename,
                                    commit.sha
                                );
                            }
                            unified_diff_between(old, content).unwrap_or_default()
                        }
                    }
                }
            };
            history.push((pos, index));
            revisions.push(FileRevision {
                pr_id: id.to_string(),
                file_path: file.filename.clone(),
                revision_index: index,
                content: content.clone(),
                hunks,
            });
        }
    }

    let mut comments = Vec::new();
    for c in &doc.review_comments {
        let cid = c.id.to_string();
        let mut unmappable = |reason: &str| {
            skipped.push(SkippedRecord {
                id: format!("comment {cid}"),
                reason: reason.to_string(),
            })
        };
        let Some(path) = c.path.as_deref().filter(|p| !p.is_empty()) else {
            unmappable("missing file path");
            continue;
        };
        let Some(history) = rev_at_commit.get(path) else {
            unmappable("file path not present in any commit");
            continue;
        };
        let Some(line_end) = c.line.or(c.original_line) else {
            unmappable("missing line position");
            continue;
        };
        let line_start = c.start_line.unwrap_or(line_end);
        if line_start == 0 || line_start > line_end {
            unmappable("invalid line range");
            continue;
        }
        let commit = c.commit_id.as_deref().or(c.original_commit_id.as_deref());
        let revision_index = match commit {
            None => history.last().map(|&(_, r)| r),
            Some(sha) => match commit_pos.get(sha) {
                None => None,
                Some(&pos) => history
                    .iter()
                    .rev()
                    .find(|&&(p, _)| p <= pos)
                    .map(|&(_, r)| r),
            },
        };
        let Some(revision_index) = revision_index else {
            unmappable("commit does not resolve to a revision of the file");
            continue;
        };
        comments.push(ReviewComment {
            id: cid,
            pr_id: id.to_string(),
            file_path: path.to_string(),
            revision_index,
            line_start,
            line_end,
            body: c.body.clone(),
            author: pseudonymize(c.user.as_ref().map_or("", |u| u.login.as_str()), salt),
            created_at: c.created_at,
            thread_id: String::new(),
            reply_to: None,
            topic_override: c.topic,
        });
    }

    thread_comments(doc, &mut comments);

    PullRequest {
        id: id.to_string(),
        repo: doc.pull_request.repo.clone(),
        created_at: doc.pull_request.created_at,
        merged: doc
            .pull_request
            .merged
            .unwrap_or(doc.pull_request.merged_at.is_some()),
        revisions,
        comments,
    }
}

/// Groups comments by thread root and chains replies by timestamp.
fn thread_comments(doc: &ExportDocument, comments: &mut [ReviewComment]) {
    let parent: HashMap<String, String> = doc
        .review_comments
        .iter()
        .filter_map(|c| Some((c.id.to_string(), c.in_reply_to_id.as_ref()?.to_string())))
        .collect();
    let root_of = |id: &str| {
        let mut cur = id.to_string();
        let mut hops = 0;
        while let Some(p) = parent.get(&cur) {
            if hops > parent.len() {
                break;
            }
            cur = p.clone();
            hops += 1;
        }
        cur
    };
    for c in comments.iter_mut() {
        c.thread_id = format!("t{}", root_of(&c.id));
    }
    comments.sort_by(|a, b| (a.created_at, &a.id).cmp(&(b.created_at, &b.id)));
    // Each comment replies to the latest strictly earlier one in its thread.
    let mut seen: HashMap<String, Vec<(String, DateTime<Utc>)>> = HashMap::new();
    for c in comments.iter_mut() {
        let thread = seen.entry(c.thread_id.clone()).or_default();
        c.reply_to = thread
            .iter()
            .rev()
            .find(|(_, ts)| *ts < c.created_at)
            .map(|(id, _)| id.clone());
        thread.push((c.id.clone(), c.created_at));
    }
}

/// Renders a corpus back into provider-export shape. Pseudonyms are emitted
/// as logins, so a round trip changes authors only through re-salting.
pub fn to_export(corpus: &ReviewCorpus) -> Vec<ExportDocument> {
    corpus
        .pull_requests
        .iter()
        .map(|pr| {
            let max_rev = pr.revisions.iter().map(|r| r.revision_index).max();
            let commits = max_rev
                .map_or(0..0, |m| 0..m + 1)
                .map(|k| ExportCommit {
                    sha: format!("rev{k}"),
                    files: pr
                        .revisions
                        .iter()
                        .filter(|r| r.revision_index == k)
                        .map(|r| ExportFile {
                            filename: r.file_path.clone(),
                            content: Some(r.content.clone()),
                            patch: (k > 0).then(|| super::format_unified_diff(&r.hunks)),
                        })
                        .collect(),
                })
                .collect();
            let by_id: HashMap<&str, &ReviewComment> =
                pr.comments.iter().map(|c| (c.id.as_str(), c)).collect();
            let review_comments = pr
                .comments
                .iter()
                .map(|c| {
                    // Reply chains collapse to the thread root, as providers do.
                    let mut root = c;
                    while let Some(p) = root.reply_to.as_deref().and_then(|p| by_id.get(p)) {
                        root = p;
                    }
                    ExportComment {
                        id: ExportId::Text(c.id.clone()),
                        path: Some(c.file_path.clone()),
                        commit_id: Some(format!("rev{}", c.revision_index)),
                        original_commit_id: None,
                        line: Some(c.line_end),
                        original_line: None,
                        start_line: (c.line_start != c.line_end).then_some(c.line_start),
                        body: c.body.clone(),
                        user: Some(ExportUser {
                            login: c.author.clone(),
                        }),
                        created_at: c.created_at,
                        in_reply_to_id: (root.id != c.id).then(|| ExportId::Text(root.id.clone())),
                        topic: c.topic_override,
                    }
                })
                .collect();
            ExportDocument {
                pull_request: ExportPullRequest {
                    id: Some(ExportId::Text(pr.id.clone())),
                    number: None,
                    repo: pr.repo.clone(),
                    created_at: pr.created_at,
                    merged: Some(pr.merged),
                    merged_at: None,
                },
                commits,
                review_comments,
            }
        })
        .collect()
}
