use std::fmt::Write as _;

use super::{ChangeHunk, CorpusError, HunkLine, LineOrigin, Result};

const NO_NEWLINE_MARKER: &str = "\\ No newline at end of file";

/// Splits file content into lines without terminators. The boolean reports
/// whether the content ends with a newline (vacuously true for "").
pub fn split_lines(content: &str) -> (Vec<&str>, bool) {
    if content.is_empty() {
        return (Vec::new(), true);
    }
    let trailing = content.ends_with('\n');
    let body = if trailing {
        &content[..content.len() - 1]
    } else {
        content
    };
    (body.split('\n').collect(), trailing)
}

fn malformed(line_no: usize, reason: impl Into<String>) -> CorpusError {
    CorpusError::MalformedDiff {
        line_no,
        reason: reason.into(),
    }
}

fn parse_range(spec: &str, line_no: usize) -> Result<(u32, u32)> {
    let (start, len) = match spec.split_once(',') {
        Some((s, l)) => (s, Some(l)),
        None => (spec, None),
    };
    let start: u32 = start
        .parse()
        .map_err(|_| malformed(line_no, format!("bad range start `{start}`")))?;
    let len: u32 = match len {
        Some(l) => l
            .parse()
            .map_err(|_| malformed(line_no, format!("bad range length `{l}`")))?,
        None => 1,
    };
    Ok((start, len))
}

fn parse_header(line: &str, line_no: usize) -> Result<ChangeHunk> {
    let rest = line
        .strip_prefix("@@ -")
        .ok_or_else(|| malformed(line_no, "hunk header must start with `@@ -`"))?;
    let (ranges, _section) = rest
        .split_once(" @@")
        .ok_or_else(|| malformed(line_no, "unterminated hunk header"))?;
    let (old, new) = ranges
        .split_once(" +")
        .ok_or_else(|| malformed(line_no, "missing new-file range"))?;
    let (old_start, old_len) = parse_range(old, line_no)?;
    let (new_start, new_len) = parse_range(new, line_no)?;
    Ok(ChangeHunk {
        old_start,
        old_len,
        new_start,
        new_len,
        lines: Vec::new(),
        old_missing_newline: false,
        new_missing_newline: false,
    })
}

fn is_file_header(line: &str) -> bool {
    const PREFIXES: [&str; 10] = [
        "diff ",
        "index ",
        "--- ",
        "+++ ",
        "new file mode",
        "deleted file mode",
        "old mode",
        "new mode",
        "similarity index",
        "rename ",
    ];
    PREFIXES.iter().any(|p| line.starts_with(p))
}

/// Parses a unified diff for a single file into its hunks.
///
/// File headers (`diff --git`, `---`, `+++`, `index`, ...) before the first
/// hunk are skipped. Hunk bodies are consumed until both header counts are
/// satisfied; a body that ends early or overruns is rejected. The
/// "\ No newline at end of file" marker is folded into the hunk flags.
pub fn parse_unified_diff(text: &str) -> Result<Vec<ChangeHunk>> {
    let (lines, _) = split_lines(text);
    let mut hunks = Vec::new();
    let mut i = 0;

    while i < lines.len() && !lines[i].starts_with("@@") {
        if !is_file_header(lines[i]) && !lines[i].is_empty() {
            return Err(malformed(
                i + 1,
                format!("unexpected line before first hunk: `{}`", lines[i]),
            ));
        }
        i += 1;
    }

    while i < lines.len() {
        let line_no = i + 1;
        let line = lines[i];
        if !line.starts_with("@@") {
            return Err(malformed(
                line_no,
                format!("expected hunk header, found `{line}`"),
            ));
        }
        let mut hunk = parse_header(line, line_no)?;
        if hunk.old_len > 0 && hunk.old_start == 0 || hunk.new_len > 0 && hunk.new_start == 0 {
            return Err(malformed(line_no, "non-empty range starting at line 0"));
        }
        i += 1;
        let (mut old_seen, mut new_seen) = (0u32, 0u32);
        while old_seen < hunk.old_len || new_seen < hunk.new_len {
            let Some(&body) = lines.get(i) else {
                return Err(malformed(i + 1, "hunk body shorter than its header counts"));
            };
            let (origin, text) = match body.as_bytes().first() {
                Some(b' ') => (LineOrigin::Context, &body[1..]),
                Some(b'+') => (LineOrigin::Added, &body[1..]),
                Some(b'-') => (LineOrigin::Removed, &body[1..]),
                // Some tools strip the lone space of an empty context line.
                None => (LineOrigin::Context, ""),
                Some(b'\\') => {
                    mark_missing_newline(&mut hunk, i + 1)?;
                    i += 1;
                    continue;
                }
                Some(_) => {
                    return Err(malformed(
                        i + 1,
                        format!("bad hunk line prefix in `{body}`"),
                    ));
                }
            };
            match origin {
                LineOrigin::Context => {
                    old_seen += 1;
                    new_seen += 1;
                }
                LineOrigin::Added => new_seen += 1,
                LineOrigin::Removed => old_seen += 1,
            }
            if old_seen > hunk.old_len || new_seen > hunk.new_len {
                return Err(malformed(i + 1, "hunk body longer than its header counts"));
            }
            hunk.lines.push(HunkLine::new(origin, text));
            i += 1;
        }
        if let Some(&marker) = lines.get(i) {
            if marker.starts_with('\\') {
                mark_missing_newline(&mut hunk, i + 1)?;
                i += 1;
            }
        }
        if let Some(prev) = hunks.last() {
            let prev: &ChangeHunk = prev;
            if hunk.old_start < prev.old_start + prev.old_len {
                return Err(malformed(line_no, "hunks overlap or are out of order"));
            }
        }
        hunks.push(hunk);
    }
    Ok(hunks)
}

fn mark_missing_newline(hunk: &mut ChangeHunk, line_no: usize) -> Result<()> {
    match hunk.lines.last().map(|l| l.origin) {
        Some(LineOrigin::Context) => {
            hunk.old_missing_newline = true;
            hunk.new_missing_newline = true;
        }
        Some(LineOrigin::Added) => hunk.new_missing_newline = true,
        Some(LineOrigin::Removed) => hunk.old_missing_newline = true,
        None => return Err(malformed(line_no, "no-newline marker before any hunk line")),
    }
    Ok(())
}

/// Serializes hunks back to unified-diff text (hunk headers and bodies only).
pub fn format_unified_diff(hunks: &[ChangeHunk]) -> String {
    let mut out = String::new();
    for h in hunks {
        let _ = writeln!(
            out,
            "@@ -{},{} +{},{} @@",
            h.old_start, h.old_len, h.new_start, h.new_len
        );
        let last_old = h.lines.iter().rposition(|l| l.origin != LineOrigin::Added);
        let last_new = h
            .lines
            .iter()
            .rposition(|l| l.origin != LineOrigin::Removed);
        for (idx, l) in h.lines.iter().enumerate() {
            let prefix = match l.origin {
                LineOrigin::Context => ' ',
                LineOrigin::Added => '+',
                LineOrigin::Removed => '-',
            };
            let _ = writeln!(out, "{prefix}{}", l.text);
            let marks_old = h.old_missing_newline && last_old == Some(idx);
            let marks_new = h.new_missing_newline && last_new == Some(idx);
            if marks_old || marks_new {
                out.push_str(NO_NEWLINE_MARKER);
                out.push('\n');
            }
        }
    }
    out
}

/// Applies hunks to `old_content`, verifying every CONTEXT and REMOVED line.
pub fn apply_hunks(old_content: &str, hunks: &[ChangeHunk]) -> Result<String> {
    let (old_lines, old_trailing) = split_lines(old_content);
    let mut out: Vec<&str> = Vec::with_capacity(old_lines.len());
    let mut cursor = 0usize;
    let mut new_trailing = old_trailing;

    for (hunk_index, h) in hunks.iter().enumerate() {
        let mismatch = || CorpusError::HunkMismatch { hunk_index };
        let start = if h.old_len == 0 {
            h.old_start as usize
        } else {
            h.old_start as usize - 1
        };
        if start < cursor || start > old_lines.len() {
            return Err(mismatch());
        }
        out.extend_from_slice(&old_lines[cursor..start]);
        cursor = start;
        for l in &h.lines {
            match l.origin {
                LineOrigin::Context | LineOrigin::Removed => {
                    if old_lines.get(cursor) != Some(&l.text.as_str()) {
                        return Err(mismatch());
                    }
                    cursor += 1;
                    if l.origin == LineOrigin::Context {
                        out.push(&l.text);
                    }
                }
                LineOrigin::Added => out.push(&l.text),
            }
        }
        if cursor == old_lines.len() && h.old_len > 0 && h.old_missing_newline == old_trailing {
            return Err(mismatch());
        }
        if cursor == old_lines.len() {
            new_trailing = !h.new_missing_newline;
        }
    }
    out.extend_from_slice(&old_lines[cursor..]);

    let mut text = out.join("\n");
    if new_trailing && !out.is_empty() {
        text.push('\n');
    }
    Ok(text)
}

/// Computes hunks between two contents using a Myers line diff with three
/// lines of context.
///
/// Hunks are built from the diff operations directly; the text formatter of
/// `similar` miscounts some headers when a file lacks a final newline.
pub fn unified_diff_between(old: &str, new: &str) -> Result<Vec<ChangeHunk>> {
    // A final line without newline differs from the same text with one.
    fn keyed(content: &str) -> Vec<(&str, bool)> {
        let (lines, trailing) = split_lines(content);
        let n = lines.len();
        lines
            .into_iter()
            .enumerate()
            .map(|(i, l)| (l, i + 1 == n && !trailing))
            .collect()
    }
    let (a, b) = (keyed(old), keyed(new));
    let ops = similar::capture_diff_slices(similar::Algorithm::Myers, &a, &b);
    let mut hunks = Vec::new();
    for group in similar::group_diff_ops(ops, 3) {
        let (Some(first), Some(last)) = (group.first(), group.last()) else {
            continue;
        };
        let old_range = first.old_range().start..last.old_range().end;
        let new_range = first.new_range().start..last.new_range().end;
        let mut lines = Vec::new();
        for op in &group {
            let (tag, old_r, new_r) = op.as_tag_tuple();
            let removed = a[old_r].iter().map(|l| (LineOrigin::Removed, l.0));
            let added = b[new_r].iter().map(|l| (LineOrigin::Added, l.0));
            let run: Vec<(LineOrigin, &str)> = match tag {
                similar::DiffTag::Equal => removed.map(|(_, l)| (LineOrigin::Context, l)).collect(),
                similar::DiffTag::Delete => removed.collect(),
                similar::DiffTag::Insert => added.collect(),
                similar::DiffTag::Replace => removed.chain(added).collect(),
            };
            lines.extend(run.into_iter().map(|(o, l)| HunkLine::new(o, l)));
        }
        let start =
            |r: &std::ops::Range<usize>| if r.is_empty() { r.start } else { r.start + 1 } as u32;
        hunks.push(ChangeHunk {
            old_start: start(&old_range),
            old_len: old_range.len() as u32,
            new_start: start(&new_range),
            new_len: new_range.len() as u32,
            lines,
            old_missing_newline: !old_range.is_empty()
                && old_range.end == a.len()
                && a[a.len() - 1].1,
            new_missing_newline: !new_range.is_empty()
                && new_range.end == b.len()
                && b[b.len() - 1].1,
        });
    }
    Ok(hunks)
}
