use std::fmt;

use serde::{Deserialize, Serialize};

use super::profile::SubjectProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Identifier,
    Keyword,
    Literal,
    Operator,
    Punctuation,
}

/// Byte range into a source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub len: usize,
}

impl Span {
    pub fn new(start: usize, len: usize) -> Self {
        Self { start, len }
    }

    pub fn end(&self) -> usize {
        self.start + self.len
    }

    pub fn contains(&self, other: Span) -> bool {
        other.start >= self.start && other.end() <= self.end()
    }

    pub fn overlaps(&self, other: Span) -> bool {
        self.start < other.end() && other.start < self.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: Span,
}

impl Token {
    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }

    pub fn is_punct(&self, text: &str) -> bool {
        self.is(TokenKind::Punctuation, text)
    }

    pub fn is_op(&self, text: &str) -> bool {
        self.is(TokenKind::Operator, text)
    }

    pub fn is_ident(&self) -> bool {
        self.kind == TokenKind::Identifier
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriviaKind {
    LineComment,
    BlockComment,
    Directive,
}

/// Everything the lexer sees: tokens plus the trivia between them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Lexeme {
    Token(Token),
    Trivia { kind: TriviaKind, span: Span },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LexError {
    #[error("unterminated comment at offset {offset}")]
    UnterminatedComment { offset: usize },
    #[error("unterminated string literal at offset {offset}")]
    UnterminatedString { offset: usize },
    #[error("unterminated character literal at offset {offset}")]
    UnterminatedChar { offset: usize },
}

impl LexError {
    pub fn offset(&self) -> usize {
        match *self {
            LexError::UnterminatedComment { offset }
            | LexError::UnterminatedString { offset }
            | LexError::UnterminatedChar { offset } => offset,
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    profile: &'a SubjectProfile,
    operators: Vec<&'a str>,
    at_line_start: bool,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str, profile: &'a SubjectProfile) -> Self {
        let mut operators: Vec<&str> = profile.operators.iter().map(String::as_str).collect();
        operators.sort_by_key(|op| std::cmp::Reverse(op.len()));
        Self {
            src,
            pos: 0,
            profile,
            operators,
            at_line_start: true,
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek_nth(&self, n: usize) -> Option<char> {
        self.rest().chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn run(mut self) -> Result<Vec<Lexeme>, LexError> {
        let mut out = Vec::new();
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                if c == '\n' {
                    self.at_line_start = true;
                }
                self.bump();
                continue;
            }
            let start = self.pos;
            if let Some(prefix) = self.profile.directive_prefix.as_deref() {
                if self.at_line_start && self.rest().starts_with(prefix) {
                    self.skip_directive();
                    out.push(Lexeme::Trivia {
                        kind: TriviaKind::Directive,
                        span: Span::new(start, self.pos - start),
                    });
                    continue;
                }
            }
            self.at_line_start = false;
            if self.rest().starts_with(self.profile.line_comment.as_str()) {
                match self.rest().find('\n') {
                    Some(n) => self.pos += n,
                    None => self.pos = self.src.len(),
                }
                out.push(Lexeme::Trivia {
                    kind: TriviaKind::LineComment,
                    span: Span::new(start, self.pos - start),
                });
                continue;
            }
            let (open, close) = (&self.profile.block_comment.0, &self.profile.block_comment.1);
            if self.rest().starts_with(open.as_str()) {
                let body = &self.rest()[open.len()..];
                let Some(n) = body.find(close.as_str()) else {
                    return Err(LexError::UnterminatedComment { offset: start });
                };
                self.pos += open.len() + n + close.len();
                out.push(Lexeme::Trivia {
                    kind: TriviaKind::BlockComment,
                    span: Span::new(start, self.pos - start),
                });
                continue;
            }
            let token = self.next_token(c, start)?;
            out.push(Lexeme::Token(token));
        }
        Ok(out)
    }

    fn skip_directive(&mut self) {
        loop {
            match self.rest().find('\n') {
                Some(n) => {
                    let line = &self.rest()[..n];
                    self.pos += n;
                    if !line.trim_end().ends_with('\\') {
                        break;
                    }
                    self.pos += 1;
                }
                None => {
                    self.pos = self.src.len();
                    break;
                }
            }
        }
    }

    fn make(&self, kind: TokenKind, start: usize) -> Token {
        Token {
            kind,
            text: self.src[start..self.pos].to_string(),
            span: Span::new(start, self.pos - start),
        }
    }

    fn next_token(&mut self, c: char, start: usize) -> Result<Token, LexError> {
        if let Some(delim) = self
            .profile
            .string_delims
            .iter()
            .find(|d| self.rest().starts_with(d.as_str()))
            .cloned()
        {
            self.quoted(&delim, start, false)?;
            return Ok(self.make(TokenKind::Literal, start));
        }
        if !self.profile.char_delim.is_empty() && self.rest().starts_with(&self.profile.char_delim) {
            let delim = self.profile.char_delim.clone();
            self.quoted(&delim, start, true)?;
            return Ok(self.make(TokenKind::Literal, start));
        }
        if c.is_ascii_digit() || (c == '.' && self.peek_nth(1).is_some_and(|d| d.is_ascii_digit())) {
            self.number();
            return Ok(self.make(TokenKind::Literal, start));
        }
        if self.profile.is_ident_start(c) {
            while self.peek().is_some_and(|c| self.profile.is_ident_continue(c)) {
                self.bump();
            }
            let kind = if self.profile.is_keyword(&self.src[start..self.pos]) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            };
            return Ok(self.make(kind, start));
        }
        if self.profile.punctuation.contains(c) {
            // `...` is listed as an operator and must win over `.`
            if let Some(op) = self.match_operator() {
                self.pos += op.len();
                return Ok(self.make(TokenKind::Operator, start));
            }
            self.bump();
            return Ok(self.make(TokenKind::Punctuation, start));
        }
        if let Some(op) = self.match_operator() {
            self.pos += op.len();
        } else {
            self.bump();
        }
        Ok(self.make(TokenKind::Operator, start))
    }

    fn match_operator(&self) -> Option<&'a str> {
        let rest = self.rest();
        self.operators.iter().copied().find(|op| rest.starts_with(op))
    }

    fn quoted(&mut self, delim: &str, start: usize, is_char: bool) -> Result<(), LexError> {
        let err = || {
            if is_char {
                LexError::UnterminatedChar { offset: start }
            } else {
                LexError::UnterminatedString { offset: start }
            }
        };
        self.pos += delim.len();
        loop {
            if self.rest().starts_with(delim) {
                self.pos += delim.len();
                return Ok(());
            }
            match self.bump() {
                None | Some('\n') => return Err(err()),
                Some('\\') => {
                    if self.bump().is_none() {
                        return Err(err());
                    }
                }
                Some(_) => {}
            }
        }
    }

    fn number(&mut self) {
        let hex = self.rest().starts_with("0x") || self.rest().starts_with("0X");
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                self.bump();
                let exponent = if hex {
                    matches!(c, 'p' | 'P')
                } else {
                    matches!(c, 'e' | 'E')
                };
                if exponent && matches!(self.peek(), Some('+') | Some('-')) {
                    self.bump();
                }
            } else {
                break;
            }
        }
    }
}

/// Splits source into lexemes, keeping comments and directives as trivia.
pub fn lex(source: &str, profile: &SubjectProfile) -> Result<Vec<Lexeme>, LexError> {
    Lexer::new(source, profile).run()
}

/// Tokenizes source. Comments, directives and whitespace never appear in the
/// output; literals are kept verbatim.
pub fn tokenize(source: &str, profile: &SubjectProfile) -> Result<Vec<Token>, LexError> {
    Ok(lex(source, profile)?
        .into_iter()
        .filter_map(|l| match l {
            Lexeme::Token(t) => Some(t),
            Lexeme::Trivia { .. } => None,
        })
        .collect())
}

/// Whether two tokens written back to back would lex as something else.
fn needs_separator(left: &str, right: &str, profile: &SubjectProfile) -> bool {
    let joined = format!("{left}{right}");
    match tokenize(&joined, profile) {
        Ok(tokens) => tokens.len() != 2 || tokens[0].text != left || tokens[1].text != right,
        Err(_) => true,
    }
}

/// Joins token texts with no whitespace except a single space where two
/// tokens would otherwise merge.
pub fn join_tokens<'t>(tokens: impl IntoIterator<Item = &'t str>, profile: &SubjectProfile) -> String {
    let mut out = String::new();
    let mut prev: Option<&str> = None;
    for text in tokens {
        if let Some(p) = prev {
            if needs_separator(p, text, profile) {
                out.push(' ');
            }
        }
        out.push_str(text);
        prev = Some(text);
    }
    out
}

/// Removes comments and whitespace, keeping single spaces only where
/// needed to preserve token boundaries. Idempotent.
pub fn strip_comments_and_ws(source: &str, profile: &SubjectProfile) -> Result<String, LexError> {
    let tokens = tokenize(source, profile)?;
    Ok(join_tokens(tokens.iter().map(|t| t.text.as_str()), profile))
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TokenKind::Identifier => "ident",
            TokenKind::Keyword => "keyword",
            TokenKind::Literal => "lit",
            TokenKind::Operator => "op",
            TokenKind::Punctuation => "punct",
        };
        f.write_str(s)
    }
}
