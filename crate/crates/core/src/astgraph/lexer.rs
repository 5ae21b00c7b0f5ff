use super::{AstError, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Keyword,
    IntLit,
    FloatLit,
    StrLit,
    CharLit,
    /// Operators and punctuation.
    Symbol,
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: Span,
}

impl Token {
    pub fn is_literal(&self) -> bool {
        matches!(
            self.kind,
            TokenKind::IntLit | TokenKind::FloatLit | TokenKind::StrLit | TokenKind::CharLit
        ) || (self.kind == TokenKind::Keyword
            && matches!(self.text.as_str(), "true" | "false" | "null"))
    }
}

const KEYWORDS: [&str; 9] = [
    "class", "if", "else", "while", "for", "return", "true", "false", "null",
];

const SYMBOLS: [&str; 24] = [
    "||", "&&", "==", "!=", "<=", ">=", "{", "}", "(", ")", "[", "]", ";", ",", ".", "=", "<", ">",
    "+", "-", "*", "/", "%", "!",
];

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
}

impl Cursor {
    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }
}

fn lex_error(line: u32, col: u32, expected: &str, found: impl Into<String>) -> AstError {
    AstError::SyntaxError {
        line,
        col,
        expected: expected.to_string(),
        found: found.into(),
    }
}

/// Splits MiniJ source into tokens, skipping whitespace and comments.
/// The returned stream always ends with an `Eof` token.
pub fn lex(src: &str) -> Result<Vec<Token>, AstError> {
    let mut cur = Cursor {
        chars: src.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();

    loop {
        // whitespace and comments
        loop {
            match (cur.peek(0), cur.peek(1)) {
                (Some(c), _) if c.is_whitespace() => {
                    cur.bump();
                }
                (Some('/'), Some('/')) => {
                    while let Some(c) = cur.peek(0) {
                        if c == '\n' {
                            break;
                        }
                        cur.bump();
                    }
                }
                (Some('/'), Some('*')) => {
                    let (l, c) = (cur.line, cur.col);
                    cur.bump();
                    cur.bump();
                    loop {
                        match (cur.peek(0), cur.peek(1)) {
                            (Some('*'), Some('/')) => {
                                cur.bump();
                                cur.bump();
                                break;
                            }
                            (Some(_), _) => {
                                cur.bump();
                            }
                            (None, _) => return Err(lex_error(l, c, "`*/`", "end of input")),
                        }
                    }
                }
                _ => break,
            }
        }

        let (line, col) = (cur.line, cur.col);
        let Some(c) = cur.peek(0) else {
            out.push(Token {
                kind: TokenKind::Eof,
                text: String::new(),
                span: Span::new(line, col, line, col),
            });
            return Ok(out);
        };

        let mut text = String::new();
        let kind = if c.is_alphabetic() || c == '_' || c == '$' {
            while let Some(c) = cur
                .peek(0)
                .filter(|c| c.is_alphanumeric() || *c == '_' || *c == '$')
            {
                text.push(c);
                cur.bump();
            }
            if KEYWORDS.contains(&text.as_str()) {
                TokenKind::Keyword
            } else {
                TokenKind::Ident
            }
        } else if c.is_ascii_digit() {
            let mut kind = TokenKind::IntLit;
            while let Some(c) = cur.peek(0).filter(char::is_ascii_digit) {
                text.push(c);
                cur.bump();
            }
            if cur.peek(0) == Some('.') && cur.peek(1).is_some_and(|c| c.is_ascii_digit()) {
                kind = TokenKind::FloatLit;
                text.push('.');
                cur.bump();
                while let Some(c) = cur.peek(0).filter(char::is_ascii_digit) {
                    text.push(c);
                    cur.bump();
                }
            }
            if let Some(c) = cur
                .peek(0)
                .filter(|c| matches!(c, 'L' | 'l' | 'f' | 'F' | 'd' | 'D'))
            {
                text.push(c);
                cur.bump();
            }
            kind
        } else if c == '"' || c == '\'' {
            let quote = c;
            text.push(c);
            cur.bump();
            loop {
                match cur.peek(0) {
                    None | Some('\n') => {
                        return Err(lex_error(line, col, "closing quote", "end of line"));
                    }
                    Some('\\') => {
                        text.push('\\');
                        cur.bump();
                        if let Some(e) = cur.peek(0).filter(|&e| e != '\n') {
                            text.push(e);
                            cur.bump();
                        }
                    }
                    Some(q) if q == quote => {
                        text.push(q);
                        cur.bump();
                        break;
                    }
                    Some(o) => {
                        text.push(o);
                        cur.bump();
                    }
                }
            }
            if quote == '"' {
                TokenKind::StrLit
            } else {
                TokenKind::CharLit
            }
        } else {
            let two: String = [Some(c), cur.peek(1)].iter().flatten().collect();
            let sym = SYMBOLS
                .iter()
                .find(|s| two.starts_with(**s))
                .ok_or_else(|| lex_error(line, col, "token", c.to_string()))?;
            for _ in 0..sym.chars().count() {
                cur.bump();
            }
            text.push_str(sym);
            TokenKind::Symbol
        };
        let end_col = col + text.chars().count() as u32 - 1;
        out.push(Token {
            kind,
            text,
            span: Span::new(line, col, line, end_col),
        });
    }
}
