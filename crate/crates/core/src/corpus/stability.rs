use std::collections::BTreeSet;

use super::{ChangeHunk, CorpusError, FileRevision, LineOrigin, PullRequest, Result};

/// Ordered set of 1-based line numbers.
pub type LineSet = BTreeSet<u32>;

/// New-file line numbers of every ADDED line in the revision's hunks.
/// Revision 0 has no hunks, so its set is empty.
pub fn changed_lines(revision: &FileRevision) -> LineSet {
    let mut out = LineSet::new();
    for h in &revision.hunks {
        let mut new_line = h.new_start.max(1);
        for l in &h.lines {
            match l.origin {
                LineOrigin::Added => {
                    out.insert(new_line);
                    new_line += 1;
                }
                LineOrigin::Context => new_line += 1,
                LineOrigin::Removed => {}
            }
        }
    }
    out
}

/// Carries old-file line numbers through one revision's hunks.
///
/// Returns `None` when the revision edits the tracked lines: a tracked line
/// appears as REMOVED, or new lines are inserted between two consecutive
/// tracked lines. Otherwise returns the tracked lines in new-file coordinates.
pub fn track_lines(hunks: &[ChangeHunk], lines: &LineSet) -> Option<LineSet> {
    walk_hunks(hunks, lines, true)
}

/// Carries old-file line numbers through hunks, dropping REMOVED lines.
pub fn map_lines(hunks: &[ChangeHunk], lines: &LineSet) -> LineSet {
    walk_hunks(hunks, lines, false).unwrap_or_default()
}

fn walk_hunks(hunks: &[ChangeHunk], lines: &LineSet, strict: bool) -> Option<LineSet> {
    let mut mapped = LineSet::new();
    let mut offset: i64 = 0;
    let mut pending = lines.iter().copied().peekable();

    for h in hunks {
        let first_old = if h.old_len == 0 {
            h.old_start + 1
        } else {
            h.old_start
        };
        // Lines before this hunk shift by the accumulated offset.
        while let Some(&l) = pending.peek() {
            if l >= first_old {
                break;
            }
            mapped.insert((i64::from(l) + offset) as u32);
            pending.next();
        }
        let mut old_line = first_old;
        let mut new_line = if h.new_len == 0 {
            h.new_start + 1
        } else {
            h.new_start
        };
        for hl in &h.lines {
            match hl.origin {
                LineOrigin::Context => {
                    if lines.contains(&old_line) {
                        mapped.insert(new_line);
                    }
                    old_line += 1;
                    new_line += 1;
                }
                LineOrigin::Removed => {
                    if strict && lines.contains(&old_line) {
                        return None;
                    }
                    old_line += 1;
                }
                LineOrigin::Added => {
                    let before = old_line - 1;
                    if strict && before >= 1 && lines.contains(&before) && lines.contains(&old_line)
                    {
                        return None;
                    }
                    new_line += 1;
                }
            }
        }
        while pending.peek().is_some_and(|&l| l < old_line) {
            pending.next();
        }
        offset += i64::from(h.new_len) - i64::from(h.old_len);
    }
    for l in pending {
        mapped.insert((i64::from(l) + offset) as u32);
    }
    Some(mapped)
}

/// Hunks that turn the new file back into the old one.
pub fn invert_hunks(hunks: &[ChangeHunk]) -> Vec<ChangeHunk> {
    hunks
        .iter()
        .map(|h| ChangeHunk {
            old_start: h.new_start,
            old_len: h.new_len,
            new_start: h.old_start,
            new_len: h.old_len,
            lines: h
                .lines
                .iter()
                .map(|l| super::HunkLine {
                    origin: match l.origin {
                        LineOrigin::Added => LineOrigin::Removed,
                        LineOrigin::Removed => LineOrigin::Added,
                        LineOrigin::Context => LineOrigin::Context,
                    },
                    text: l.text.clone(),
                })
                .collect(),
            old_missing_newline: h.new_missing_newline,
            new_missing_newline: h.old_missing_newline,
        })
        .collect()
}

/// Maps lines of revision `from` of a file into revision `to`, forwards or
/// backwards through the intermediate hunks. Lines edited on the way are
/// dropped.
pub fn map_lines_between(
    pr: &PullRequest,
    file_path: &str,
    lines: &LineSet,
    from: u32,
    to: u32,
) -> Result<LineSet> {
    let revs = pr.file_revisions(file_path);
    for idx in [from, to] {
        if !revs.iter().any(|r| r.revision_index == idx) {
            return Err(CorpusError::UnknownRevision {
                pr_id: pr.id.clone(),
                file_path: file_path.to_string(),
                revision_index: idx,
            });
        }
    }
    let mut cur = lines.clone();
    if from < to {
        for r in revs
            .iter()
            .filter(|r| r.revision_index > from && r.revision_index <= to)
        {
            cur = map_lines(&r.hunks, &cur);
        }
    } else {
        for r in revs
            .iter()
            .rev()
            .filter(|r| r.revision_index > to && r.revision_index <= from)
        {
            cur = map_lines(&invert_hunks(&r.hunks), &cur);
        }
    }
    Ok(cur)
}

/// Number of consecutive revisions after `from_revision` (through the final
/// one) in which none of `lines` is removed or edited.
pub fn stability_horizon(
    pr: &PullRequest,
    file_path: &str,
    lines: &LineSet,
    from_revision: u32,
) -> Result<u32> {
    let revs = pr.file_revisions(file_path);
    let pos = revs
        .iter()
        .position(|r| r.revision_index == from_revision)
        .ok_or_else(|| CorpusError::UnknownRevision {
            pr_id: pr.id.clone(),
            file_path: file_path.to_string(),
            revision_index: from_revision,
        })?;
    let mut tracked = lines.clone();
    let mut horizon = 0;
    for rev in &revs[pos + 1..] {
        match track_lines(&rev.hunks, &tracked) {
            Some(next) => {
                tracked = next;
                horizon += 1;
            }
            None => break,
        }
    }
    Ok(horizon)
}
