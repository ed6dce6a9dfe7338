//! Tokenizer shared by the constraint language and the `.ia` document format.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// 1-based line/column position plus the byte offset into the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Span {
    pub line: usize,
    pub column: usize,
    #[serde(skip)]
    pub offset: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    /// `<name>` with no interior whitespace.
    EnumLit(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    ColonColon,
    Dot,
    DotDot,
    Ellipsis,
    Tilde,
    /// `@pre`
    AtPre,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    /// `->` or `→`
    Arrow,
    /// `=>` or `⇒`
    FatArrow,
    /// `|->`
    MapsTo,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Int(n) => return write!(f, "`{n}`"),
            Tok::Str(s) => return write!(f, "\"{s}\""),
            Tok::EnumLit(s) => return write!(f, "`<{s}>`"),
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::ColonColon => "::",
            Tok::Dot => ".",
            Tok::DotDot => "..",
            Tok::Ellipsis => "...",
            Tok::Tilde => "~",
            Tok::AtPre => "@pre",
            Tok::Eq => "=",
            Tok::Neq => "<>",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Arrow => "->",
            Tok::FatArrow => "=>",
            Tok::MapsTo => "|->",
            Tok::Eof => return f.write_str("end of input"),
        };
        write!(f, "`{s}`")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
    /// Byte offset one past the last character of the token.
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct SyntaxError {
    pub span: Span,
    pub message: String,
}

impl SyntaxError {
    pub fn new(span: Span, message: impl Into<String>) -> Self {
        SyntaxError {
            span,
            message: message.into(),
        }
    }
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn span(&self) -> Span {
        Span {
            line: self.line,
            column: self.column,
            offset: self.pos,
        }
    }
}

/// Splits `src` into tokens. `//` starts a comment running to end of line.
pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut cur = Cursor {
        src,
        pos: 0,
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    loop {
        while let Some(c) = cur.peek() {
            if c.is_whitespace() {
                cur.bump();
            } else if cur.rest().starts_with("//") {
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
            } else {
                break;
            }
        }
        let span = cur.span();
        let Some(c) = cur.peek() else {
            out.push(Token {
                tok: Tok::Eof,
                span,
                end: cur.pos,
            });
            return Ok(out);
        };
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let start = cur.pos;
            while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                cur.bump();
            }
            Tok::Ident(src[start..cur.pos].to_string())
        } else if c.is_ascii_digit() {
            let start = cur.pos;
            while matches!(cur.peek(), Some(c) if c.is_ascii_digit()) {
                cur.bump();
            }
            let text = &src[start..cur.pos];
            let n = text
                .parse::<i64>()
                .map_err(|_| SyntaxError::new(span, format!("integer literal `{text}` out of range")))?;
            Tok::Int(n)
        } else if c == '"' {
            cur.bump();
            let mut s = String::new();
            loop {
                match cur.bump() {
                    Some('"') => break,
                    Some('\\') => match cur.bump() {
                        Some(c) => s.push(c),
                        None => return Err(SyntaxError::new(span, "unterminated string literal")),
                    },
                    Some(c) => s.push(c),
                    None => return Err(SyntaxError::new(span, "unterminated string literal")),
                }
            }
            Tok::Str(s)
        } else if c == '<' && enum_literal_len(cur.rest()).is_some() {
            let len = enum_literal_len(cur.rest()).unwrap_or(0);
            let name = cur.rest()[1..len - 1].to_string();
            for _ in 0..name.chars().count() + 2 {
                cur.bump();
            }
            Tok::EnumLit(name)
        } else {
            let rest = cur.rest();
            let (tok, len) = if rest.starts_with("|->") {
                (Tok::MapsTo, 3)
            } else if rest.starts_with("...") {
                (Tok::Ellipsis, 3)
            } else if rest.starts_with("@pre") && !matches!(cur.peek_at(4), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                (Tok::AtPre, 4)
            } else if rest.starts_with("::") {
                (Tok::ColonColon, 2)
            } else if rest.starts_with("..") {
                (Tok::DotDot, 2)
            } else if rest.starts_with("<>") {
                (Tok::Neq, 2)
            } else if rest.starts_with("<=") {
                (Tok::Le, 2)
            } else if rest.starts_with(">=") {
                (Tok::Ge, 2)
            } else if rest.starts_with("->") {
                (Tok::Arrow, 2)
            } else if rest.starts_with("=>") {
                (Tok::FatArrow, 2)
            } else {
                let t = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ',' => Tok::Comma,
                    ';' => Tok::Semi,
                    ':' => Tok::Colon,
                    '.' => Tok::Dot,
                    '~' => Tok::Tilde,
                    '=' => Tok::Eq,
                    '<' => Tok::Lt,
                    '>' => Tok::Gt,
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '→' => Tok::Arrow,
                    '⇒' => Tok::FatArrow,
                    other => {
                        return Err(SyntaxError::new(span, format!("unexpected character `{other}`")))
                    }
                };
                (t, 1)
            };
            for _ in 0..len {
                cur.bump();
            }
            tok
        };
        out.push(Token {
            tok,
            span,
            end: cur.pos,
        });
    }
}

/// Byte length of a `<ident>` literal at the start of `s`, if one is there.
fn enum_literal_len(s: &str) -> Option<usize> {
    let body = s.strip_prefix('<')?;
    let close = body.find('>')?;
    is_identifier(&body[..close]).then_some(close + 2)
}

/// Cursor over a token vector with the lookahead helpers both parsers use.
#[derive(Debug, Clone)]
pub struct TokenStream {
    toks: Vec<Token>,
    pos: usize,
}

impl TokenStream {
    pub fn new(toks: Vec<Token>) -> Self {
        TokenStream { toks, pos: 0 }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_nth(&self, n: usize) -> &Tok {
        let idx = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    pub fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    pub fn token(&self) -> &Token {
        &self.toks[self.pos]
    }

    pub fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].end
        }
    }

    pub fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn is_ident(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn eat_ident(&mut self, kw: &str) -> bool {
        if self.is_ident(kw) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, tok: &Tok) -> Result<Span, SyntaxError> {
        if self.peek() == tok {
            Ok(self.next().span)
        } else {
            Err(self.unexpected(&tok.to_string()))
        }
    }

    pub fn expect_ident(&mut self) -> Result<(String, Span), SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let span = self.next().span;
                Ok((s, span))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<Span, SyntaxError> {
        if self.is_ident(kw) {
            Ok(self.next().span)
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    pub fn unexpected(&self, wanted: &str) -> SyntaxError {
        SyntaxError::new(self.span(), format!("expected {wanted}, found {}", self.peek()))
    }
}
