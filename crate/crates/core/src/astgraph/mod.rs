//! Typed AST program graphs for MiniJ, a small Java-like language.
//!
//! Nodes are numbered densely in pre-order. Edges are either `CHILD`
//! (parent → child) or `NEXT_SIBLING` (child → following child of the same
//! parent). The grammar is documented in `docs/grammar.md`.

pub mod lexer;
mod parser;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parser::parse_source;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AstError {
    #[error("syntax error at {line}:{col}: expected {expected}, found {found}")]
    SyntaxError {
        line: u32,
        col: u32,
        expected: String,
        found: String,
    },
    #[error("line {line_start} is beyond the end of the file ({line_count} lines)")]
    OutOfRange { line_start: u32, line_count: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NodeKind {
    CompilationUnit,
    ClassDecl,
    FieldDecl,
    MethodDecl,
    Param,
    Block,
    If,
    While,
    For,
    Return,
    VarDecl,
    ExprStmt,
    Assign,
    Binary,
    Unary,
    Call,
    FieldAccess,
    Index,
    Identifier,
    Literal,
}

impl NodeKind {
    pub const COUNT: usize = 20;

    pub const ALL: [NodeKind; Self::COUNT] = [
        NodeKind::CompilationUnit,
        NodeKind::ClassDecl,
        NodeKind::FieldDecl,
        NodeKind::MethodDecl,
        NodeKind::Param,
        NodeKind::Block,
        NodeKind::If,
        NodeKind::While,
        NodeKind::For,
        NodeKind::Return,
        NodeKind::VarDecl,
        NodeKind::ExprStmt,
        NodeKind::Assign,
        NodeKind::Binary,
        NodeKind::Unary,
        NodeKind::Call,
        NodeKind::FieldAccess,
        NodeKind::Index,
        NodeKind::Identifier,
        NodeKind::Literal,
    ];

    /// Position in [`NodeKind::ALL`]; used for one-hot features.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn carries_token(self) -> bool {
        matches!(
            self,
            NodeKind::Identifier
                | NodeKind::Literal
                | NodeKind::Binary
                | NodeKind::Unary
                | NodeKind::Assign
        )
    }

    pub fn is_statement(self) -> bool {
        matches!(
            self,
            NodeKind::Block
                | NodeKind::If
                | NodeKind::While
                | NodeKind::For
                | NodeKind::Return
                | NodeKind::VarDecl
                | NodeKind::ExprStmt
        )
    }
}

/// 1-based inclusive source region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub line_start: u32,
    pub col_start: u32,
    pub line_end: u32,
    pub col_end: u32,
}

impl Span {
    pub fn new(line_start: u32, col_start: u32, line_end: u32, col_end: u32) -> Self {
        Self {
            line_start,
            col_start,
            line_end,
            col_end,
        }
    }

    pub fn contains(&self, other: &Span) -> bool {
        (self.line_start, self.col_start) <= (other.line_start, other.col_start)
            && (other.line_end, other.col_end) <= (self.line_end, self.col_end)
    }

    pub fn merge(&self, other: &Span) -> Span {
        let (ls, cs) = (self.line_start, self.col_start).min((other.line_start, other.col_start));
        let (le, ce) = (self.line_end, self.col_end).max((other.line_end, other.col_end));
        Span::new(ls, cs, le, ce)
    }

    pub fn line_len(&self) -> u32 {
        self.line_end - self.line_start
    }

    pub fn covers_lines(&self, line_start: u32, line_end: u32) -> bool {
        self.line_start <= line_start && line_end <= self.line_end
    }

    pub fn lines(&self) -> BTreeSet<u32> {
        (self.line_start..=self.line_end).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AstNode {
    pub id: usize,
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EdgeKind {
    Child,
    NextSibling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AstEdge {
    pub src: usize,
    pub dst: usize,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AstGraph {
    pub file_path: String,
    pub revision_index: u32,
    /// Number of lines in the parsed source.
    pub line_count: u32,
    /// Column range `(first, last)` of the tokens on each line, or `None`
    /// for lines without tokens.
    pub line_extents: Vec<Option<(u32, u32)>>,
    pub nodes: Vec<AstNode>,
    pub edges: Vec<AstEdge>,
}

impl AstGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn with_origin(mut self, file_path: impl Into<String>, revision_index: u32) -> Self {
        self.file_path = file_path.into();
        self.revision_index = revision_index;
        self
    }

    /// Parent of each node (`None` for the root).
    pub fn parents(&self) -> Vec<Option<usize>> {
        let mut parent = vec![None; self.nodes.len()];
        for e in self.edges.iter().filter(|e| e.kind == EdgeKind::Child) {
            parent[e.dst] = Some(e.src);
        }
        parent
    }

    pub fn children(&self, id: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Child && e.src == id)
            .map(|e| e.dst)
            .collect()
    }

    pub fn depths(&self) -> Vec<usize> {
        // Pre-order ids guarantee parents precede children.
        let parents = self.parents();
        let mut depth = vec![0; self.nodes.len()];
        for i in 0..self.nodes.len() {
            if let Some(p) = parents[i] {
                depth[i] = depth[p] + 1;
            }
        }
        depth
    }

    /// True when `descendant` is `ancestor` or lies in its subtree.
    pub fn is_in_subtree(
        &self,
        ancestor: usize,
        descendant: usize,
        parents: &[Option<usize>],
    ) -> bool {
        let mut cur = Some(descendant);
        while let Some(c) = cur {
            if c == ancestor {
                return true;
            }
            cur = parents[c];
        }
        false
    }
}

/// Region that a node must contain to cover lines `[line_start, line_end]`:
/// the extent of the tokens on those lines, or `None` when they hold no
/// tokens (blank or comment-only lines).
pub fn line_range_extent(graph: &AstGraph, line_start: u32, line_end: u32) -> Option<Span> {
    let mut extent: Option<Span> = None;
    for line in line_start..=line_end.min(graph.line_count) {
        if let Some((c0, c1)) = graph.line_extents.get(line as usize - 1).copied().flatten() {
            let s = Span::new(line, c0, line, c1);
            extent = Some(extent.map_or(s, |e| e.merge(&s)));
        }
    }
    extent
}

/// True when `span` fully covers lines `[line_start, line_end]`: it contains
/// every token on them, or for token-free lines, the lines themselves.
pub fn covers_range(span: &Span, extent: Option<&Span>, line_start: u32, line_end: u32) -> bool {
    match extent {
        Some(e) => span.contains(e),
        None => span.covers_lines(line_start, line_end),
    }
}

/// Id of the node with the smallest line span that fully covers lines
/// `[line_start, line_end]`; ties go to the deepest node, then the lowest
/// id. The root is returned when no node with a strictly smaller line span
/// than the root covers the range.
///
/// Covering nodes form a chain from the root (sibling spans are disjoint),
/// and line spans never grow going down, so the answer is the deepest
/// covering node reached by descending from the root.
pub fn node_span_cover(
    graph: &AstGraph,
    line_start: u32,
    line_end: u32,
) -> Result<usize, AstError> {
    if line_start == 0 || line_start > graph.line_count.max(1) {
        return Err(AstError::OutOfRange {
            line_start,
            line_count: graph.line_count,
        });
    }
    let extent = line_range_extent(graph, line_start, line_end);
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); graph.nodes.len()];
    for e in graph.edges.iter().filter(|e| e.kind == EdgeKind::Child) {
        children[e.src].push(e.dst);
    }
    let mut cur = 0;
    'descend: loop {
        for &c in &children[cur] {
            if covers_range(&graph.nodes[c].span, extent.as_ref(), line_start, line_end) {
                cur = c;
                continue 'descend;
            }
        }
        break;
    }
    if graph.nodes[cur].span.line_len() >= graph.nodes[0].span.line_len() {
        return Ok(0);
    }
    Ok(cur)
}

/// Sparse adjacency entry `(row, col, weight)`.
pub type AdjacencyEntry = (usize, usize, f64);

/// Builds a deduplicated, sorted adjacency list from the selected edge kinds.
pub fn to_adjacency(
    graph: &AstGraph,
    edge_kinds: &[EdgeKind],
    symmetric: bool,
    self_loops: bool,
) -> Vec<AdjacencyEntry> {
    let mut pairs = BTreeSet::new();
    for e in graph.edges.iter().filter(|e| edge_kinds.contains(&e.kind)) {
        pairs.insert((e.src, e.dst));
        if symmetric {
            pairs.insert((e.dst, e.src));
        }
    }
    if self_loops {
        for i in 0..graph.nodes.len() {
            pairs.insert((i, i));
        }
    }
    pairs.into_iter().map(|(i, j)| (i, j, 1.0)).collect()
}
