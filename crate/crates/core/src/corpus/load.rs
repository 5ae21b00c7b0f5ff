use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use super::{apply_hunks, CorpusError, PullRequest, Result, ReviewCorpus};

pub const CORPUS_SCHEMA_VERSION: u32 = 1;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    schema_version: u32,
}

fn schema(record: impl Into<String>, field: &str, reason: impl Into<String>) -> CorpusError {
    CorpusError::SchemaError {
        record: record.into(),
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// Reads a JSON-lines corpus file: an optional `{"schema_version": N}` header
/// line followed by one pull request per line.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<ReviewCorpus> {
    let text = std::fs::read_to_string(path)?;
    parse_corpus(&text)
}

pub fn parse_corpus(text: &str) -> Result<ReviewCorpus> {
    let mut records: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();

    let mut schema_version = CORPUS_SCHEMA_VERSION;
    if let Some(&(line_no, first)) = records.first() {
        if let Ok(h) = serde_json::from_str::<Header>(first) {
            if h.schema_version != CORPUS_SCHEMA_VERSION {
                return Err(schema(
                    format!("line {line_no}"),
                    "schema_version",
                    format!(
                        "unsupported major version {} (expected {CORPUS_SCHEMA_VERSION})",
                        h.schema_version
                    ),
                ));
            }
            schema_version = h.schema_version;
            records.remove(0);
        }
    }

    // Per-record decoding and validation are independent; collect in file
    // order so the first reported error is deterministic.
    let decoded: Vec<Result<PullRequest>> = records
        .par_iter()
        .map(|&(line_no, line)| {
            let pr: PullRequest = serde_json::from_str(line)
                .map_err(|e| schema(format!("line {line_no}"), "<record>", e.to_string()))?;
            validate_pull_request(&pr, &format!("line {line_no} (pr `{}`)", pr.id))?;
            Ok(pr)
        })
        .collect();
    let pull_requests = decoded.into_iter().collect::<Result<Vec<_>>>()?;

    let corpus = ReviewCorpus {
        schema_version,
        pull_requests,
    };
    validate_unique_ids(&corpus)?;
    Ok(corpus)
}

/// Writes the corpus as JSON lines with a leading schema header.
pub fn write_corpus(corpus: &ReviewCorpus, mut out: impl Write) -> Result<()> {
    writeln!(out, "{{\"schema_version\":{}}}", corpus.schema_version)?;
    for pr in &corpus.pull_requests {
        let line = serde_json::to_string(pr).map_err(|e| std::io::Error::other(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn validate_unique_ids(corpus: &ReviewCorpus) -> Result<()> {
    let mut prs = HashSet::new();
    let mut comments = HashSet::new();
    for pr in &corpus.pull_requests {
        if !prs.insert(pr.id.as_str()) {
            return Err(schema(
                format!("pr `{}`", pr.id),
                "id",
                "duplicate pull request id",
            ));
        }
        for c in &pr.comments {
            if !comments.insert(c.id.as_str()) {
                return Err(schema(
                    format!("comment `{}`", c.id),
                    "id",
                    "duplicate comment id",
                ));
            }
        }
    }
    Ok(())
}

pub(crate) fn validate_pull_request(pr: &PullRequest, locator: &str) -> Result<()> {
    if pr.id.is_empty() {
        return Err(schema(locator, "id", "empty pull request id"));
    }
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, rev) in pr.revisions.iter().enumerate() {
        if rev.pr_id != pr.id {
            return Err(schema(
                format!("{locator}, revision {i}"),
                "pr_id",
                format!("`{}` does not match enclosing pull request", rev.pr_id),
            ));
        }
        groups.entry(&rev.file_path).or_default().push(i);
    }
    for (path, idxs) in &groups {
        let mut prev: Option<&str> = None;
        for (expected, &i) in idxs.iter().enumerate() {
            let rev = &pr.revisions[i];
            let at = format!("{locator}, file `{path}` revision {}", rev.revision_index);
            if rev.revision_index as usize != expected {
                return Err(schema(
                    at,
                    "revision_index",
                    format!(
                        "expected {expected}; indices must be 0-based, increasing and gap-free"
                    ),
                ));
            }
            for (h_idx, h) in rev.hunks.iter().enumerate() {
                if !h.counts_consistent() {
                    return Err(schema(
                        &at,
                        "hunks",
                        format!("hunk {h_idx} line counts disagree with its header"),
                    ));
                }
            }
            match prev {
                None if !rev.hunks.is_empty() => {
                    return Err(schema(at, "hunks", "revision 0 must not carry hunks"));
                }
                None => {}
                Some(old) => {
                    match apply_hunks(old, &rev.hunks) {
                        Ok(new) if new == rev.content => {}
                        Ok(_) => return Err(schema(
                            at,
                            "hunks",
                            "applying hunks to the previous revision does not reproduce content",
                        )),
                        Err(e) => return Err(schema(at, "hunks", e.to_string())),
                    }
                }
            }
            prev = Some(&rev.content);
        }
    }

    let by_id: HashMap<&str, &super::ReviewComment> =
        pr.comments.iter().map(|c| (c.id.as_str(), c)).collect();
    for c in &pr.comments {
        let at = format!("{locator}, comment `{}`", c.id);
        if c.pr_id != pr.id {
            return Err(schema(at, "pr_id", "does not match enclosing pull request"));
        }
        if c.line_start == 0 {
            return Err(schema(at, "line_start", "line numbers are 1-based"));
        }
        if c.line_start > c.line_end {
            return Err(schema(
                at,
                "line_start",
                format!("line_start {} > line_end {}", c.line_start, c.line_end),
            ));
        }
        if pr.revision(&c.file_path, c.revision_index).is_none() {
            return Err(schema(
                at,
                "revision_index",
                format!(
                    "no revision {} of `{}` in this pull request",
                    c.revision_index, c.file_path
                ),
            ));
        }
        if let Some(parent) = &c.reply_to {
            let Some(p) = by_id.get(parent.as_str()) else {
                return Err(schema(
                    at,
                    "reply_to",
                    format!("unknown comment `{parent}`"),
                ));
            };
            if p.thread_id != c.thread_id {
                return Err(schema(
                    at,
                    "reply_to",
                    "referenced comment is in another thread",
                ));
            }
            if p.created_at >= c.created_at {
                return Err(schema(at, "reply_to", "referenced comment is not earlier"));
            }
        }
    }
    Ok(())
}
