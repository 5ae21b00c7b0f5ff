mod common;

use mcr_graph::corpus::{normalize_export, pseudonymize, to_export, ReviewCorpus};

/// Applies `f` to every author. Revisions are put in ingestion order
/// (revision index, then path).
fn with_authors(mut c: ReviewCorpus, f: impl Fn(&str) -> String) -> ReviewCorpus {
    for pr in &mut c.pull_requests {
        pr.revisions.sort_by(|a, b| {
            (a.revision_index, &a.file_path).cmp(&(b.revision_index, &b.file_path))
        });
        for cm in &mut pr.comments {
            cm.author = f(&cm.author);
        }
    }
    c
}

#[test]
fn export_then_normalize_recovers_the_corpus() {
    let original = common::mini::corpus();
    let out = normalize_export(&to_export(&original), "salt");
    assert!(out.skipped.is_empty(), "{:?}", out.skipped);
    assert_eq!(
        out.corpus,
        with_authors(original, |a| pseudonymize(a, "salt"))
    );
}

#[test]
fn normalizing_twice_changes_only_pseudonyms() {
    let once = normalize_export(&to_export(&common::mini::corpus()), "s").corpus;
    let twice = normalize_export(&to_export(&once), "s").corpus;
    assert_eq!(twice, with_authors(once, |a| pseudonymize(a, "s")));
}

#[test]
fn pseudonyms_depend_on_salt_only_through_the_hash() {
    assert_eq!(pseudonymize("alice", "x"), pseudonymize("alice", "x"));
    assert_ne!(pseudonymize("alice", "x"), pseudonymize("alice", "y"));
    assert_ne!(pseudonymize("alice", "x"), pseudonymize("bob", "x"));
    assert!(!pseudonymize("alice", "x").contains("alice"));
}
