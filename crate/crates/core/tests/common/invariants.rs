//! Structural checks of a parsed AstGraph, written against the raw token
//! stream rather than the parser's own bookkeeping.

use mcr_graph::astgraph::lexer::{lex, Token, TokenKind};
use mcr_graph::astgraph::{AstGraph, EdgeKind, NodeKind};
use mcr_graph::corpus::split_lines;

fn is_type_bracket_pair(tokens: &[Token], open: usize) -> bool {
    tokens.get(open).is_some_and(|t| t.text == "[")
        && tokens.get(open + 1).is_some_and(|t| t.text == "]")
}

/// Identifier and literal tokens that are not in a declaration position:
/// type names, declared names, and class names never become leaves.
pub fn expected_leaf_tokens(src: &str) -> Vec<Token> {
    let tokens: Vec<Token> = lex(src)
        .unwrap()
        .into_iter()
        .filter(|t| t.kind != TokenKind::Eof)
        .collect();
    let mut out = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        if t.is_literal() {
            out.push(t.clone());
            continue;
        }
        if t.kind != TokenKind::Ident {
            continue;
        }
        let prev = i.checked_sub(1).map(|p| &tokens[p]);
        let next = tokens.get(i + 1);
        let declared =
            prev.is_some_and(|p| {
                p.kind == TokenKind::Ident || (p.kind == TokenKind::Keyword && p.text == "class")
            }) || (i >= 2 && tokens[i - 1].text == "]" && is_type_bracket_pair(&tokens, i - 2))
                || next.is_some_and(|n| n.kind == TokenKind::Ident)
                || is_type_bracket_pair(&tokens, i + 1);
        if !declared {
            out.push(t.clone());
        }
    }
    out
}

/// Every graph invariant; returns the first violation.
pub fn check_graph(g: &AstGraph, src: &str) -> Result<(), String> {
    let n = g.nodes.len();
    if n == 0 || g.nodes[0].kind != NodeKind::CompilationUnit {
        return Err("node 0 is not the compilation unit".into());
    }
    for (i, node) in g.nodes.iter().enumerate() {
        if node.id != i {
            return Err(format!("node at {i} has id {}", node.id));
        }
    }
    let line_count = split_lines(src).0.len() as u32;
    if g.line_count != line_count {
        return Err(format!(
            "line_count {} for {line_count} lines",
            g.line_count
        ));
    }

    let mut parent = vec![None; n];
    let mut children = vec![Vec::new(); n];
    for e in g.edges.iter().filter(|e| e.kind == EdgeKind::Child) {
        if e.src >= n || e.dst >= n {
            return Err(format!("edge {e:?} out of range"));
        }
        if parent[e.dst].replace(e.src).is_some() {
            return Err(format!("node {} has two parents", e.dst));
        }
        children[e.src].push(e.dst);
    }
    let roots: Vec<usize> = (0..n).filter(|&i| parent[i].is_none()).collect();
    if roots != [0] {
        return Err(format!("roots {roots:?}"));
    }

    // Iterative DFS in child order must visit 0, 1, 2, ...
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![0];
    while let Some(v) = stack.pop() {
        order.push(v);
        stack.extend(children[v].iter().rev());
    }
    if order != (0..n).collect::<Vec<_>>() {
        return Err("ids are not in pre-order".into());
    }

    for (p, cs) in children.iter().enumerate() {
        for &c in cs {
            if !g.nodes[p].span.contains(&g.nodes[c].span) {
                return Err(format!("span of {c} escapes its parent {p}"));
            }
        }
    }
    let mut siblings: Vec<(usize, usize)> = g
        .edges
        .iter()
        .filter(|e| e.kind == EdgeKind::NextSibling)
        .map(|e| (e.src, e.dst))
        .collect();
    siblings.sort_unstable();
    let mut want: Vec<(usize, usize)> = children
        .iter()
        .flat_map(|cs| cs.windows(2).map(|w| (w[0], w[1])))
        .collect();
    want.sort_unstable();
    if siblings != want {
        return Err("NEXT_SIBLING edges differ from consecutive children".into());
    }

    for node in &g.nodes {
        let s = node.span;
        if (s.line_start, s.col_start) > (s.line_end, s.col_end)
            || s.line_start < 1
            || s.col_start < 1
        {
            return Err(format!("node {} has an empty span", node.id));
        }
        if s.line_end > line_count.max(1) {
            return Err(format!("node {} ends past the file", node.id));
        }
        let wants_token = matches!(
            node.kind,
            NodeKind::Identifier
                | NodeKind::Literal
                | NodeKind::Binary
                | NodeKind::Unary
                | NodeKind::Assign
        );
        if wants_token != node.token.is_some() {
            return Err(format!(
                "node {} ({:?}) token presence is wrong",
                node.id, node.kind
            ));
        }
    }

    let leaves: Vec<(String, u32, u32)> = g
        .nodes
        .iter()
        .filter(|nd| {
            children[nd.id].is_empty()
                && matches!(nd.kind, NodeKind::Identifier | NodeKind::Literal)
        })
        .map(|nd| {
            (
                nd.token.clone().unwrap_or_default(),
                nd.span.line_start,
                nd.span.col_start,
            )
        })
        .collect();
    let lexed: Vec<(String, u32, u32)> = expected_leaf_tokens(src)
        .into_iter()
        .map(|t| (t.text, t.span.line_start, t.span.col_start))
        .collect();
    if leaves != lexed {
        return Err(format!(
            "leaf tokens {leaves:?} differ from lexed tokens {lexed:?}"
        ));
    }
    Ok(())
}

/// `(name, source)` of every fixture in `dir`, sorted by name.
pub fn fixtures(dir: &str) -> Vec<(String, String)> {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(dir);
    let mut out: Vec<(String, String)> = std::fs::read_dir(&root)
        .unwrap_or_else(|e| panic!("{}: {e}", root.display()))
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "minij"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read_to_string(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

/// `(line, col)` from a leading `// expect L:C` comment.
pub fn expected_error_position(src: &str) -> (u32, u32) {
    let spec = src
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("// expect "))
        .expect("expect header");
    let (l, c) = spec.trim().split_once(':').unwrap();
    (l.parse().unwrap(), c.parse().unwrap())
}
