//! Independent reference implementations: brute-force searches and
//! generators shared by the property tests and the acceptance report.

use std::collections::BTreeSet;

use mcr_graph::astgraph::lexer::{lex, TokenKind};
use mcr_graph::astgraph::{node_span_cover, parse_source, AstGraph, EdgeKind};
use mcr_graph::corpus::{apply_hunks, parse_unified_diff, ReviewComment};
use mcr_graph::graphlearn::{gcn_forward, Activation, GcnLayer, Tensor};
use mcr_graph::labeling::anchor_comment;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gradients::random_adjacency;
use super::planted;

// ---- diffs ----

const WORDS: [&str; 12] = [
    "alpha",
    "beta",
    "gamma",
    "delta",
    "  indent",
    "",
    "x = 1;",
    "return y;",
    "}",
    "{",
    "// note",
    "tail",
];

fn random_lines(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    (0..n)
        .map(|_| WORDS.choose(rng).unwrap().to_string())
        .collect()
}

fn join(lines: &[String], trailing_newline: bool) -> String {
    let mut s = lines.join("\n");
    if trailing_newline && !lines.is_empty() {
        s.push('\n');
    }
    s
}

/// Random `(old, new)` file pairs: scattered inserts, deletes and
/// replacements, empty files, and missing final newlines.
pub fn diff_pairs(seed: u64, n: usize) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            let len = if k % 17 == 0 { 0 } else { rng.gen_range(1..40) };
            let old = random_lines(&mut rng, len);
            let mut new = old.clone();
            for _ in 0..rng.gen_range(0..6) {
                let at = rng.gen_range(0..=new.len());
                match rng.gen_range(0..3) {
                    0 => new.insert(at, WORDS.choose(&mut rng).unwrap().to_string()),
                    1 if at < new.len() => {
                        new.remove(at);
                    }
                    _ if at < new.len() => new[at] = format!("edited {}", rng.gen_range(0..1000)),
                    _ => new.push("appended".into()),
                }
            }
            let old_nl = rng.gen_bool(0.8);
            let new_nl = rng.gen_bool(0.8);
            (join(&old, old_nl), join(&new, new_nl))
        })
        .collect()
}

/// `(old, new, diff -u output)` triples in `tests/fixtures/diffs`, produced
/// by GNU diffutils; `generate.py` there rebuilds them.
pub fn reference_diffs() -> Vec<(String, String, String)> {
    #[derive(serde::Deserialize)]
    struct Case {
        old: String,
        new: String,
        diff: String,
    }
    let path =
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/diffs/pairs.json");
    let cases: Vec<Case> = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    cases.into_iter().map(|c| (c.old, c.new, c.diff)).collect()
}

/// Indices of cases where applying the parsed reference diff does not
/// reproduce `new` exactly.
pub fn diff_roundtrip_failures(cases: &[(String, String, String)]) -> Vec<usize> {
    cases
        .iter()
        .enumerate()
        .filter(|(_, (old, new, diff))| match parse_unified_diff(diff) {
            Ok(h) => apply_hunks(old, &h).map_or(true, |got| got != *new),
            Err(_) => true,
        })
        .map(|(i, _)| i)
        .collect()
}

// ---- anchoring ----

/// A planted-generator program re-laid out with random line breaks, blank
/// lines and comment-only lines.
pub fn random_layout_program(rng: &mut ChaCha8Rng, class_no: usize) -> String {
    let src = planted::program(rng, class_no);
    let tokens = lex(&src).unwrap();
    let mut out = String::new();
    for t in tokens.iter().filter(|t| t.kind != TokenKind::Eof) {
        out.push_str(&t.text);
        match rng.gen_range(0..10) {
            0 => out.push('\n'),
            1 => out.push_str("\n\n"),
            2 => out.push_str("\n// remark\n"),
            _ => out.push(' '),
        }
    }
    out
}

fn depth(graph: &AstGraph) -> Vec<usize> {
    let mut parent = vec![None; graph.nodes.len()];
    for e in graph.edges.iter().filter(|e| e.kind == EdgeKind::Child) {
        parent[e.dst] = Some(e.src);
    }
    (0..graph.nodes.len())
        .map(|mut v| {
            let mut d = 0;
            while let Some(p) = parent[v] {
                v = p;
                d += 1;
            }
            d
        })
        .collect()
}

/// Exhaustive smallest-cover search. A node covers lines `a..=b` when its
/// span contains every token on them, or, for token-free lines, the lines.
pub fn cover_oracle(graph: &AstGraph, src: &str, a: u32, b: u32) -> usize {
    let toks: Vec<_> = lex(src)
        .unwrap()
        .into_iter()
        .filter(|t| t.kind != TokenKind::Eof && (a..=b).contains(&t.span.line_start))
        .collect();
    let depth = depth(graph);
    let covers = |id: usize| {
        let s = graph.nodes[id].span;
        if toks.is_empty() {
            s.line_start <= a && b <= s.line_end
        } else {
            toks.iter().all(|t| {
                (s.line_start, s.col_start) <= (t.span.line_start, t.span.col_start)
                    && (t.span.line_end, t.span.col_end) <= (s.line_end, s.col_end)
            })
        }
    };
    let line_len = |id: usize| graph.nodes[id].span.line_end - graph.nodes[id].span.line_start;
    let best = (0..graph.nodes.len())
        .filter(|&id| covers(id))
        .min_by_key(|&id| (line_len(id), std::cmp::Reverse(depth[id]), id))
        .unwrap_or(0);
    if line_len(best) >= line_len(0) {
        0
    } else {
        best
    }
}

/// Mismatch descriptions over `graphs` random programs with `ranges`
/// random line ranges each, for both `node_span_cover` and
/// `anchor_comment` (with a random changed-line set).
pub fn anchoring_mismatches(seed: u64, graphs: usize, ranges: usize) -> (usize, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = Vec::new();
    let mut checked = 0;
    for g_no in 0..graphs {
        let src = random_layout_program(&mut rng, g_no);
        let graph = parse_source(&src).unwrap();
        let n_lines = graph.line_count;
        for _ in 0..ranges {
            let a = rng.gen_range(1..=n_lines);
            let b = rng.gen_range(a..=(a + 6).min(n_lines));
            checked += 1;
            let got = node_span_cover(&graph, a, b).unwrap();
            let want = cover_oracle(&graph, &src, a, b);
            if got != want {
                bad.push(format!(
                    "graph {g_no} lines {a}..{b}: cover {got}, oracle {want}"
                ));
            }

            let changed: BTreeSet<u32> = (1..=n_lines).filter(|_| rng.gen_bool(0.3)).collect();
            let comment = ReviewComment {
                id: "c".into(),
                pr_id: "p".into(),
                file_path: String::new(),
                revision_index: 0,
                line_start: a,
                line_end: b,
                body: String::new(),
                author: String::new(),
                created_at: chrono::DateTime::UNIX_EPOCH,
                thread_id: "t".into(),
                reply_to: None,
                topic_override: None,
            };
            let hit: Vec<u32> = changed.range(a..=b).copied().collect();
            let want = match (hit.first(), hit.last()) {
                (Some(&x), Some(&y)) => cover_oracle(&graph, &src, x, y),
                _ => want,
            };
            let got = anchor_comment(&graph, &comment, &changed).unwrap();
            if got != want {
                bad.push(format!(
                    "graph {g_no} comment {a}..{b} changed {hit:?}: anchor {got}, oracle {want}"
                ));
            }
        }
    }
    (checked, bad)
}

// ---- GCN permutation equivariance ----

/// Largest deviation between `gcn(P x)` and `P gcn(x)` over random graphs
/// and random node permutations.
pub fn gcn_equivariance_deviation(seed: u64, graphs: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..graphs {
        let n = rng.gen_range(2..16);
        let (din, dout) = (rng.gen_range(1..6), rng.gen_range(1..6));
        let adj = random_adjacency(&mut rng, n);
        let x: Vec<f64> = (0..n * din).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let layer = GcnLayer {
            w: Tensor::matrix(
                din,
                dout,
                (0..din * dout).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )
            .unwrap(),
            b: Tensor::matrix(
                1,
                dout,
                (0..dout).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )
            .unwrap(),
            activation: if rng.gen_bool(0.5) {
                Activation::Relu
            } else {
                Activation::Identity
            },
        };
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);

        let out = gcn_forward(&Tensor::matrix(n, din, x.clone()).unwrap(), &adj, &layer).unwrap();
        let mut px = vec![0.0; n * din];
        for i in 0..n {
            px[perm[i] * din..(perm[i] + 1) * din].copy_from_slice(&x[i * din..(i + 1) * din]);
        }
        let padj: Vec<(usize, usize, f64)> =
            adj.iter().map(|&(i, j, w)| (perm[i], perm[j], w)).collect();
        let pout = gcn_forward(&Tensor::matrix(n, din, px).unwrap(), &padj, &layer).unwrap();
        for i in 0..n {
            for c in 0..dout {
                worst = worst.max((out.at(i, c) - pout.at(perm[i], c)).abs());
            }
        }
    }
    worst
}

// ---- ROC-AUC ----

/// Fraction of (positive, negative) pairs ranked correctly; ties count half.
pub fn auc_brute(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (&si, _) in scores.iter().zip(labels).filter(|(_, &l)| l) {
        for (&sj, _) in scores.iter().zip(labels).filter(|(_, &l)| !l) {
            den += 1.0;
            num += if si > sj {
                1.0
            } else if si == sj {
                0.5
            } else {
                0.0
            };
        }
    }
    num / den
}

/// Random score/label sets with both classes present, coarse scores so
/// ties occur, and up to `max_len` samples.
pub fn auc_sets(seed: u64, sets: usize, max_len: usize) -> Vec<(Vec<f64>, Vec<bool>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..sets)
        .map(|_| {
            let n = rng.gen_range(2..=max_len);
            let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
            labels[0] = true;
            labels[1] = false;
            let grid = rng.gen_range(2..50) as f64;
            let scores = (0..n)
                .map(|_| (rng.gen_range(0.0..1.0) * grid).floor() / grid)
                .collect();
            (scores, labels)
        })
        .collect()
}
