//! Recursive-descent parser for MiniJ. Stops at the first error.

use super::lexer::{lex, Token, TokenKind};
use super::{AstEdge, AstError, AstGraph, AstNode, EdgeKind, NodeKind, Span};
use crate::corpus::split_lines;

const MAX_DEPTH: usize = 96;

struct Raw {
    kind: NodeKind,
    token: Option<String>,
    span: Span,
    children: Vec<Raw>,
}

impl Raw {
    fn new(kind: NodeKind, span: Span) -> Self {
        Self {
            kind,
            token: None,
            span,
            children: Vec::new(),
        }
    }

    fn with_token(mut self, token: impl Into<String>) -> Self {
        self.token = Some(token.into());
        self
    }

    fn child(mut self, c: Raw) -> Self {
        self.children.push(c);
        self
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    depth: usize,
}

type PResult<T> = Result<T, AstError>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, ahead: usize) -> &Token {
        let i = (self.pos + ahead).min(self.tokens.len() - 1);
        &self.tokens[i]
    }

    fn is(&self, text: &str) -> bool {
        let t = self.peek();
        t.kind != TokenKind::Eof
            && t.kind != TokenKind::StrLit
            && t.kind != TokenKind::CharLit
            && t.text == text
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.kind != TokenKind::Eof {
            self.pos += 1;
        }
        t
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn error(&self, expected: &str) -> AstError {
        let t = self.peek();
        AstError::SyntaxError {
            line: t.span.line_start,
            col: t.span.col_start,
            expected: expected.to_string(),
            found: if t.kind == TokenKind::Eof {
                "end of input".to_string()
            } else {
                format!("`{}`", t.text)
            },
        }
    }

    fn expect(&mut self, text: &str) -> PResult<Token> {
        if self.is(text) {
            Ok(self.bump())
        } else {
            Err(self.error(&format!("`{text}`")))
        }
    }

    fn expect_ident(&mut self, what: &str) -> PResult<Token> {
        if self.peek().kind == TokenKind::Ident {
            Ok(self.bump())
        } else {
            Err(self.error(what))
        }
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error("less deeply nested code"));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn span_from(&self, start: Span) -> Span {
        start.merge(&self.prev_span())
    }

    // type := IDENT ("[" "]")*
    fn parse_type(&mut self, what: &str) -> PResult<Span> {
        let start = self.expect_ident(what)?.span;
        while self.is("[") {
            self.bump();
            self.expect("]")?;
        }
        Ok(self.span_from(start))
    }

    fn looks_like_declaration(&self) -> bool {
        if self.peek().kind != TokenKind::Ident {
            return false;
        }
        let mut i = 1;
        loop {
            let t = self.peek_at(i);
            if t.kind == TokenKind::Ident {
                return true;
            }
            if t.kind == TokenKind::Symbol && t.text == "[" {
                let close = self.peek_at(i + 1);
                if close.kind == TokenKind::Symbol && close.text == "]" {
                    i += 2;
                    continue;
                }
            }
            return false;
        }
    }

    fn parse_class(&mut self) -> PResult<Raw> {
        let start = self.expect("class")?.span;
        self.expect_ident("class name")?;
        self.expect("{")?;
        let mut members = Vec::new();
        while !self.is("}") {
            if self.peek().kind == TokenKind::Eof {
                return Err(self.error("`}`"));
            }
            members.push(self.parse_member()?);
        }
        self.bump();
        let mut node = Raw::new(NodeKind::ClassDecl, self.span_from(start));
        node.children = members;
        Ok(node)
    }

    fn parse_member(&mut self) -> PResult<Raw> {
        let start = self.parse_type("member type")?;
        self.expect_ident("member name")?;
        if self.is("(") {
            self.bump();
            let mut params = Vec::new();
            if !self.is(")") {
                loop {
                    let p_start = self.parse_type("parameter type or `)`")?;
                    self.expect_ident("parameter name")?;
                    params.push(Raw::new(NodeKind::Param, self.span_from(p_start)));
                    if self.is(",") {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
            self.expect(")")?;
            let body = self.parse_block()?;
            let mut node = Raw::new(NodeKind::MethodDecl, self.span_from(start));
            node.children = params;
            Ok(node.child(body))
        } else {
            let mut node = Raw::new(NodeKind::FieldDecl, start);
            if self.is("=") {
                self.bump();
                node = node.child(self.parse_expr()?);
            }
            self.expect(";")?;
            node.span = self.span_from(start);
            Ok(node)
        }
    }

    fn parse_block(&mut self) -> PResult<Raw> {
        let start = self.expect("{")?.span;
        let mut stmts = Vec::new();
        while !self.is("}") {
            if self.peek().kind == TokenKind::Eof {
                return Err(self.error("`}`"));
            }
            stmts.push(self.parse_stmt()?);
        }
        self.bump();
        let mut node = Raw::new(NodeKind::Block, self.span_from(start));
        node.children = stmts;
        Ok(node)
    }

    fn parse_stmt(&mut self) -> PResult<Raw> {
        self.enter()?;
        let out = self.parse_stmt_inner();
        self.leave();
        out
    }

    fn parse_stmt_inner(&mut self) -> PResult<Raw> {
        let start = self.peek().span;
        if self.is("{") {
            return self.parse_block();
        }
        if self.peek().kind == TokenKind::Keyword {
            match self.peek().text.as_str() {
                "if" => {
                    self.bump();
                    self.expect("(")?;
                    let cond = self.parse_expr()?;
                    self.expect(")")?;
                    let then = self.parse_stmt()?;
                    let mut node = Raw::new(NodeKind::If, start).child(cond).child(then);
                    if self.is("else") {
                        self.bump();
                        node = node.child(self.parse_stmt()?);
                    }
                    node.span = self.span_from(start);
                    return Ok(node);
                }
                "while" => {
                    self.bump();
                    self.expect("(")?;
                    let cond = self.parse_expr()?;
                    self.expect(")")?;
                    let body = self.parse_stmt()?;
                    let mut node = Raw::new(NodeKind::While, start).child(cond).child(body);
                    node.span = self.span_from(start);
                    return Ok(node);
                }
                "for" => {
                    self.bump();
                    self.expect("(")?;
                    let mut node = Raw::new(NodeKind::For, start);
                    if self.is(";") {
                        self.bump();
                    } else if self.looks_like_declaration() {
                        node = node.child(self.parse_var_decl()?);
                    } else {
                        node = node.child(self.parse_expr_stmt()?);
                    }
                    if !self.is(";") {
                        node = node.child(self.parse_expr()?);
                    }
                    self.expect(";")?;
                    if !self.is(")") {
                        node = node.child(self.parse_expr()?);
                    }
                    self.expect(")")?;
                    node = node.child(self.parse_stmt()?);
                    node.span = self.span_from(start);
                    return Ok(node);
                }
                "return" => {
                    self.bump();
                    let mut node = Raw::new(NodeKind::Return, start);
                    if !self.is(";") {
                        node = node.child(self.parse_expr()?);
                    }
                    self.expect(";")?;
                    node.span = self.span_from(start);
                    return Ok(node);
                }
                _ => {}
            }
        }
        if self.looks_like_declaration() {
            return self.parse_var_decl();
        }
        self.parse_expr_stmt()
    }

    fn parse_var_decl(&mut self) -> PResult<Raw> {
        let start = self.parse_type("type")?;
        self.expect_ident("variable name")?;
        let mut node = Raw::new(NodeKind::VarDecl, start);
        if self.is("=") {
            self.bump();
            node = node.child(self.parse_expr()?);
        }
        self.expect(";")?;
        node.span = self.span_from(start);
        Ok(node)
    }

    fn parse_expr_stmt(&mut self) -> PResult<Raw> {
        let start = self.peek().span;
        let expr = self.parse_expr()?;
        self.expect(";")?;
        Ok(Raw::new(NodeKind::ExprStmt, self.span_from(start)).child(expr))
    }

    fn parse_expr(&mut self) -> PResult<Raw> {
        self.enter()?;
        let out = self.parse_assignment();
        self.leave();
        out
    }

    fn parse_assignment(&mut self) -> PResult<Raw> {
        let start = self.peek().span;
        let lhs = self.parse_binary(0)?;
        if self.is("=") {
            if !matches!(
                lhs.kind,
                NodeKind::Identifier | NodeKind::FieldAccess | NodeKind::Index
            ) {
                return Err(self.error("assignable expression before `=`"));
            }
            self.bump();
            let rhs = self.parse_expr()?;
            return Ok(Raw::new(NodeKind::Assign, self.span_from(start))
                .with_token("=")
                .child(lhs)
                .child(rhs));
        }
        Ok(lhs)
    }

    fn parse_binary(&mut self, level: usize) -> PResult<Raw> {
        const LEVELS: [&[&str]; 6] = [
            &["||"],
            &["&&"],
            &["==", "!="],
            &["<", "<=", ">", ">="],
            &["+", "-"],
            &["*", "/", "%"],
        ];
        if level == LEVELS.len() {
            return self.parse_unary();
        }
        let start = self.peek().span;
        let mut lhs = self.parse_binary(level + 1)?;
        while self.peek().kind == TokenKind::Symbol
            && LEVELS[level].contains(&self.peek().text.as_str())
        {
            let op = self.bump().text;
            let rhs = self.parse_binary(level + 1)?;
            lhs = Raw::new(NodeKind::Binary, self.span_from(start))
                .with_token(op)
                .child(lhs)
                .child(rhs);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> PResult<Raw> {
        if self.is("!") || self.is("-") {
            self.enter()?;
            let op = self.bump();
            let operand = self.parse_unary();
            self.leave();
            return Ok(Raw::new(NodeKind::Unary, self.span_from(op.span))
                .with_token(op.text)
                .child(operand?));
        }
        self.parse_postfix()
    }

    fn parse_postfix(&mut self) -> PResult<Raw> {
        let start = self.peek().span;
        let mut node = self.parse_primary()?;
        loop {
            if self.is("(") {
                self.bump();
                let mut call = Raw::new(NodeKind::Call, start).child(node);
                if !self.is(")") {
                    loop {
                        call = call.child(self.parse_expr()?);
                        if self.is(",") {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(")")?;
                call.span = self.span_from(start);
                node = call;
            } else if self.is(".") {
                self.bump();
                let name = self.expect_ident("field or method name")?;
                let field = Raw::new(NodeKind::Identifier, name.span).with_token(name.text);
                node = Raw::new(NodeKind::FieldAccess, self.span_from(start))
                    .child(node)
                    .child(field);
            } else if self.is("[") {
                self.bump();
                let index = self.parse_expr()?;
                self.expect("]")?;
                node = Raw::new(NodeKind::Index, self.span_from(start))
                    .child(node)
                    .child(index);
            } else {
                return Ok(node);
            }
        }
    }

    fn parse_primary(&mut self) -> PResult<Raw> {
        let t = self.peek().clone();
        if t.kind == TokenKind::Ident {
            self.bump();
            return Ok(Raw::new(NodeKind::Identifier, t.span).with_token(t.text));
        }
        if t.is_literal() {
            self.bump();
            return Ok(Raw::new(NodeKind::Literal, t.span).with_token(t.text));
        }
        if self.is("(") {
            self.bump();
            let inner = self.parse_expr()?;
            self.expect(")")?;
            return Ok(inner);
        }
        Err(self.error("expression"))
    }
}

fn flatten(
    raw: Raw,
    parent: Option<usize>,
    nodes: &mut Vec<AstNode>,
    edges: &mut Vec<AstEdge>,
) -> usize {
    let id = nodes.len();
    nodes.push(AstNode {
        id,
        kind: raw.kind,
        token: raw.token,
        span: raw.span,
    });
    if let Some(p) = parent {
        edges.push(AstEdge {
            src: p,
            dst: id,
            kind: EdgeKind::Child,
        });
    }
    let mut prev: Option<usize> = None;
    for child in raw.children {
        let cid = flatten(child, Some(id), nodes, edges);
        if let Some(prev) = prev {
            edges.push(AstEdge {
                src: prev,
                dst: cid,
                kind: EdgeKind::NextSibling,
            });
        }
        prev = Some(cid);
    }
    id
}

/// Parses MiniJ source into an AST graph with dense pre-order node ids.
pub fn parse_source(content: &str) -> Result<AstGraph, AstError> {
    let tokens = lex(content)?;
    let (lines, _) = split_lines(content);
    let line_count = lines.len() as u32;

    let mut line_extents: Vec<Option<(u32, u32)>> = vec![None; lines.len()];
    for t in tokens.iter().filter(|t| t.kind != TokenKind::Eof) {
        let slot = &mut line_extents[t.span.line_start as usize - 1];
        *slot = Some(match *slot {
            None => (t.span.col_start, t.span.col_end),
            Some((a, b)) => (a.min(t.span.col_start), b.max(t.span.col_end)),
        });
    }

    let mut parser = Parser {
        tokens,
        pos: 0,
        depth: 0,
    };
    let mut classes = Vec::new();
    while parser.peek().kind != TokenKind::Eof {
        classes.push(parser.parse_class()?);
    }

    let last_len = lines.last().map_or(0, |l| l.chars().count() as u32);
    let root_span = Span::new(1, 1, line_count.max(1), last_len.max(1));
    let mut root = Raw::new(NodeKind::CompilationUnit, root_span);
    root.children = classes;

    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    flatten(root, None, &mut nodes, &mut edges);
    Ok(AstGraph {
        file_path: String::new(),
        revision_index: 0,
        line_count,
        line_extents,
        nodes,
        edges,
    })
}
