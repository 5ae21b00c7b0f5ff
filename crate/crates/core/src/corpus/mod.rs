//! Review-corpus data model: pull requests, file revisions, change hunks and
//! threaded review comments, plus ingestion, validation and the revision
//! line-tracking used for negative labeling.

mod diff;
mod ingest;
mod load;
mod stability;
mod stats;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use diff::{
    apply_hunks, format_unified_diff, parse_unified_diff, split_lines, unified_diff_between,
};
pub use ingest::{
    normalize_export, pseudonymize, to_export, ExportComment, ExportCommit, ExportDocument,
    ExportFile, ExportPullRequest, ExportUser, NormalizeOutcome, SkippedRecord,
};
pub use load::{load_corpus, parse_corpus, write_corpus, CORPUS_SCHEMA_VERSION};
pub use stability::{
    changed_lines, invert_hunks, map_lines, map_lines_between, stability_horizon, track_lines,
    LineSet,
};
pub use stats::{corpus_stats, CorpusStats};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed diff at line {line_no}: {reason}")]
    MalformedDiff { line_no: usize, reason: String },
    #[error("hunk {hunk_index} does not match the old content")]
    HunkMismatch { hunk_index: usize },
    #[error("schema error in {record}, field `{field}`: {reason}")]
    SchemaError {
        record: String,
        field: String,
        reason: String,
    },
    #[error("unknown revision {revision_index} of `{file_path}` in pull request `{pr_id}`")]
    UnknownRevision {
        pr_id: String,
        file_path: String,
        revision_index: u32,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CorpusError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LineOrigin {
    Context,
    Added,
    Removed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HunkLine {
    pub origin: LineOrigin,
    pub text: String,
}

impl HunkLine {
    pub fn new(origin: LineOrigin, text: impl Into<String>) -> Self {
        Self {
            origin,
            text: text.into(),
        }
    }
}

/// One `@@ -a,b +c,d @@` block of a unified diff.
///
/// `old_missing_newline` / `new_missing_newline` carry the normalized
/// "\ No newline at end of file" markers: the last old (resp. new) line of
/// this hunk is the end of a file that has no trailing newline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeHunk {
    pub old_start: u32,
    pub old_len: u32,
    pub new_start: u32,
    pub new_len: u32,
    pub lines: Vec<HunkLine>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub old_missing_newline: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub new_missing_newline: bool,
}

impl ChangeHunk {
    pub fn count(&self, origin: LineOrigin) -> u32 {
        self.lines.iter().filter(|l| l.origin == origin).count() as u32
    }

    /// Checks `count(CONTEXT)+count(ADDED) = new_len` and
    /// `count(CONTEXT)+count(REMOVED) = old_len`.
    pub fn counts_consistent(&self) -> bool {
        let ctx = self.count(LineOrigin::Context);
        ctx + self.count(LineOrigin::Added) == self.new_len
            && ctx + self.count(LineOrigin::Removed) == self.old_len
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRevision {
    pub pr_id: String,
    pub file_path: String,
    pub revision_index: u32,
    pub content: String,
    #[serde(default)]
    pub hunks: Vec<ChangeHunk>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewComment {
    pub id: String,
    pub pr_id: String,
    pub file_path: String,
    pub revision_index: u32,
    pub line_start: u32,
    pub line_end: u32,
    pub body: String,
    pub author: String,
    pub created_at: DateTime<Utc>,
    pub thread_id: String,
    #[serde(default)]
    pub reply_to: Option<String>,
    /// Human-assigned meta-topic; overrides the keyword weak labeler.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic_override: Option<crate::labeling::MetaTopic>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PullRequest {
    pub id: String,
    pub repo: String,
    pub created_at: DateTime<Utc>,
    pub merged: bool,
    pub revisions: Vec<FileRevision>,
    #[serde(default)]
    pub comments: Vec<ReviewComment>,
}

impl PullRequest {
    /// Revisions of one file ordered by revision index.
    pub fn file_revisions(&self, file_path: &str) -> Vec<&FileRevision> {
        let mut revs: Vec<&FileRevision> = self
            .revisions
            .iter()
            .filter(|r| r.file_path == file_path)
            .collect();
        revs.sort_by_key(|r| r.revision_index);
        revs
    }

    pub fn revision(&self, file_path: &str, revision_index: u32) -> Option<&FileRevision> {
        self.revisions
            .iter()
            .find(|r| r.file_path == file_path && r.revision_index == revision_index)
    }

    /// Distinct file paths in first-appearance order.
    pub fn file_paths(&self) -> Vec<&str> {
        let mut seen: Vec<&str> = Vec::new();
        for r in &self.revisions {
            if !seen.contains(&r.file_path.as_str()) {
                seen.push(&r.file_path);
            }
        }
        seen
    }

    pub fn comments_on<'a>(
        &'a self,
        file_path: &'a str,
        revision_index: u32,
    ) -> impl Iterator<Item = &'a ReviewComment> + 'a {
        self.comments
            .iter()
            .filter(move |c| c.file_path == file_path && c.revision_index == revision_index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewCorpus {
    pub schema_version: u32,
    pub pull_requests: Vec<PullRequest>,
}

impl Default for ReviewCorpus {
    fn default() -> Self {
        Self {
            schema_version: CORPUS_SCHEMA_VERSION,
            pull_requests: Vec::new(),
        }
    }
}

impl ReviewCorpus {
    pub fn pull_request(&self, id: &str) -> Option<&PullRequest> {
        self.pull_requests.iter().find(|p| p.id == id)
    }
}
