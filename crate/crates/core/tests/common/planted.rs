//! Synthetic MiniJ programs with planted labeling rules. The generator and
//! the rule below are the oracle for the learnability checks.

use mcr_graph::astgraph::{parse_source, AstGraph, NodeKind};
use mcr_graph::graphlearn::NodeExample;
use mcr_graph::labeling::MetaTopic;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NAMES: [&str; 8] = ["a", "b", "count", "total", "idx", "value", "left", "right"];

fn ident(rng: &mut ChaCha8Rng) -> &'static str {
    NAMES.choose(rng).unwrap()
}

fn expr(rng: &mut ChaCha8Rng, depth: u32) -> String {
    if depth == 0 || rng.gen_bool(0.4) {
        return if rng.gen_bool(0.5) {
            ident(rng).to_string()
        } else {
            rng.gen_range(0..100).to_string()
        };
    }
    match rng.gen_range(0..4) {
        0 => format!("{} + {}", expr(rng, depth - 1), expr(rng, depth - 1)),
        1 => format!("{} * {}", expr(rng, depth - 1), expr(rng, depth - 1)),
        2 => format!(
            "{}({})",
            ["f", "g", "size"].choose(rng).unwrap(),
            expr(rng, depth - 1)
        ),
        _ => format!("{}.{}", ident(rng), ident(rng)),
    }
}

fn cond(rng: &mut ChaCha8Rng) -> String {
    let op = ["<", ">", "==", "!="].choose(rng).unwrap();
    format!("{} {op} {}", ident(rng), expr(rng, 1))
}

fn simple_stmt(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..3) {
        0 => format!("int {} = {};", ident(rng), expr(rng, 2)),
        1 => format!("{} = {};", ident(rng), expr(rng, 2)),
        _ => format!(
            "{}({});",
            ["log", "emit", "push"].choose(rng).unwrap(),
            expr(rng, 1)
        ),
    }
}

fn stmt(rng: &mut ChaCha8Rng, in_loop: bool) -> String {
    match rng.gen_range(0..8) {
        0 | 1 => simple_stmt(rng),
        2 => format!("if ({}) return {};", cond(rng), expr(rng, 1)),
        3 => {
            let body: Vec<String> = (0..rng.gen_range(0..3)).map(|_| simple_stmt(rng)).collect();
            let ret = if rng.gen_bool(0.7) {
                format!(" return {};", expr(rng, 1))
            } else {
                String::new()
            };
            let els = if rng.gen_bool(0.3) {
                format!(" else {{ {} }}", simple_stmt(rng))
            } else {
                String::new()
            };
            format!("if ({}) {{ {}{ret} }}{els}", cond(rng), body.join(" "))
        }
        4 if !in_loop => {
            let body: Vec<String> = (0..rng.gen_range(1..3)).map(|_| stmt(rng, true)).collect();
            format!("while ({}) {{ {} }}", cond(rng), body.join(" "))
        }
        5 if !in_loop => {
            let i = ident(rng);
            let body: Vec<String> = (0..rng.gen_range(1..3)).map(|_| stmt(rng, true)).collect();
            format!(
                "for (int {i} = 0; {i} < {}; {i} = {i} + 1) {{ {} }}",
                expr(rng, 1),
                body.join(" ")
            )
        }
        _ => simple_stmt(rng),
    }
}

/// A random class with a few methods, one statement per line.
pub fn program(rng: &mut ChaCha8Rng, class_no: usize) -> String {
    let mut src = format!("class C{class_no} {{\n");
    for m in 0..rng.gen_range(2..=3) {
        src.push_str(&format!("  int m{m}(int a, int b) {{\n"));
        for _ in 0..rng.gen_range(3..=6) {
            src.push_str(&format!("    {}\n", stmt(rng, false)));
        }
        src.push_str(&format!("    return {};\n  }}\n", expr(rng, 1)));
    }
    src.push_str("}\n");
    src
}

pub fn return_inside_if(graph: &AstGraph, parents: &[Option<usize>], id: usize) -> bool {
    let mut cur = parents[id];
    while let Some(p) = cur {
        if graph.nodes[p].kind == NodeKind::If {
            return true;
        }
        cur = parents[p];
    }
    false
}

/// Planted likelihood rule: RETURN inside an IF is POSITIVE (1), every other
/// node NEGATIVE (0).
pub fn likelihood_targets(graph: &AstGraph) -> Vec<Option<usize>> {
    let parents = graph.parents();
    graph
        .nodes
        .iter()
        .map(|n| {
            Some(usize::from(
                n.kind == NodeKind::Return && return_inside_if(graph, &parents, n.id),
            ))
        })
        .collect()
}

/// Planted topic rule over statement nodes; other nodes are masked.
pub fn topic_targets(graph: &AstGraph) -> Vec<Option<usize>> {
    let parents = graph.parents();
    graph
        .nodes
        .iter()
        .map(|n| {
            let t = match n.kind {
                NodeKind::Return if return_inside_if(graph, &parents, n.id) => MetaTopic::Bug,
                NodeKind::Return => MetaTopic::Usecase,
                NodeKind::While | NodeKind::For => MetaTopic::Structure,
                NodeKind::VarDecl => MetaTopic::Style,
                NodeKind::ExprStmt => MetaTopic::Other,
                _ => return None,
            };
            Some(t.index())
        })
        .collect()
}

pub fn corpus(seed: u64, n: usize) -> Vec<AstGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let src = program(&mut rng, i);
            parse_source(&src)
                .unwrap_or_else(|e| panic!("generated program does not parse: {e}\n{src}"))
                .with_origin(format!("C{i}.mj"), 0)
        })
        .collect()
}

pub fn examples(
    graphs: &[AstGraph],
    rule: fn(&AstGraph) -> Vec<Option<usize>>,
) -> Vec<NodeExample> {
    graphs
        .iter()
        .enumerate()
        .map(|(i, g)| NodeExample {
            pr_id: format!("planted-{i}"),
            graph: g.clone(),
            targets: rule(g),
        })
        .collect()
}
