use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::CommentMode;
use crate::lang::{lex, LexError, Lexeme, Span, SubjectProfile, TokenKind, TriviaKind};

/// Text of every inserted `add_textual` comment.
pub const TEXTUAL_COMMENT: &str = "Carry out the next step of the computation.";

struct Line {
    start: usize,
    /// Excludes the newline.
    end: usize,
}

fn lines(source: &str) -> Vec<Line> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, b) in source.bytes().enumerate() {
        if b == b'\n' {
            out.push(Line { start, end: i });
            start = i + 1;
        }
    }
    if start < source.len() {
        out.push(Line {
            start,
            end: source.len(),
        });
    }
    out
}

fn first_non_ws(source: &str, line: &Line) -> Option<usize> {
    source[line.start..line.end]
        .find(|c: char| !c.is_whitespace())
        .map(|i| line.start + i)
}

fn span_of(l: &Lexeme) -> Span {
    match l {
        Lexeme::Token(t) => t.span,
        Lexeme::Trivia { span, .. } => *span,
    }
}

/// Whether `p` falls strictly inside a literal, comment or directive.
fn inside_any(lexemes: &[Lexeme], p: usize) -> bool {
    lexemes.iter().any(|l| {
        let multi = match l {
            Lexeme::Token(t) => t.kind == TokenKind::Literal,
            Lexeme::Trivia { .. } => true,
        };
        let s = span_of(l);
        multi && s.start < p && p < s.end()
    })
}

fn comment_line(profile: &SubjectProfile, indent: &str, text: &str) -> String {
    format!("{indent}{} {text}\n", profile.line_comment)
}

/// Makes `line` safe to sit inside a line comment.
fn sanitize(line: &str, profile: &SubjectProfile) -> String {
    let mut s = line.trim().replace(&profile.block_comment.1, "* /");
    while s.ends_with('\\') {
        s.pop();
    }
    s.trim_end().to_string()
}

fn remove_all(source: &str, lexemes: &[Lexeme]) -> String {
    let mut out = String::with_capacity(source.len());
    let mut touched = BTreeSet::new();
    let mut newlines = 0;
    let mut at = 0;
    for l in lexemes {
        let Lexeme::Trivia { kind, span } = l else { continue };
        if *kind == TriviaKind::Directive {
            continue;
        }
        let kept = &source[at..span.start];
        newlines += kept.matches('\n').count();
        out.push_str(kept);
        let glue = *kind == TriviaKind::BlockComment
            && out.chars().next_back().is_some_and(|c| !c.is_whitespace())
            && source[span.end()..].chars().next().is_some_and(|c| !c.is_whitespace());
        if glue {
            out.push(' ');
        }
        touched.insert(newlines);
        at = span.end();
    }
    out.push_str(&source[at..]);

    let mut result = String::with_capacity(out.len());
    for (i, piece) in out.split_inclusive('\n').enumerate() {
        if !touched.contains(&i) {
            result.push_str(piece);
            continue;
        }
        let body = piece.trim_end_matches('\n').trim_end();
        if body.is_empty() {
            continue;
        }
        result.push_str(body);
        if piece.ends_with('\n') {
            result.push('\n');
        }
    }
    result
}

fn insert_before_lines(source: &str, inserts: BTreeMap<usize, String>) -> String {
    let mut out = String::with_capacity(source.len() * 2);
    let mut at = 0;
    for (offset, text) in inserts {
        out.push_str(&source[at..offset]);
        out.push_str(&text);
        at = offset;
    }
    out.push_str(&source[at..]);
    out
}

fn add_textual(source: &str, lexemes: &[Lexeme], profile: &SubjectProfile) -> String {
    let tokens: Vec<_> = lexemes
        .iter()
        .filter_map(|l| match l {
            Lexeme::Token(t) => Some(t),
            _ => None,
        })
        .collect();
    let by_start: BTreeMap<usize, usize> = tokens.iter().enumerate().map(|(i, t)| (t.span.start, i)).collect();
    let mut inserts = BTreeMap::new();
    for line in lines(source) {
        let Some(p) = first_non_ws(source, &line) else { continue };
        let Some(&i) = by_start.get(&p) else { continue };
        let t = tokens[i];
        if t.is_punct("{") || t.is_punct("}") {
            continue;
        }
        let opens = i == 0 || [";", "{", "}"].contains(&tokens[i - 1].text.as_str());
        if opens {
            let indent = &source[line.start..p];
            inserts.insert(line.start, comment_line(profile, indent, TEXTUAL_COMMENT));
        }
    }
    insert_before_lines(source, inserts)
}

fn add_code_comments(source: &str, lexemes: &[Lexeme], profile: &SubjectProfile) -> String {
    let mut inserts = BTreeMap::new();
    for line in lines(source) {
        let Some(p) = first_non_ws(source, &line) else { continue };
        if inside_any(lexemes, p) {
            continue;
        }
        let copy = sanitize(&source[p..line.end], profile);
        if copy.is_empty() {
            continue;
        }
        inserts.insert(line.start, comment_line(profile, &source[line.start..p], &copy));
    }
    insert_before_lines(source, inserts)
}

/// Adds or removes comments without changing the token stream.
pub fn perturb_comments(source: &str, profile: &SubjectProfile, mode: CommentMode) -> Result<String, LexError> {
    let lexemes = lex(source, profile)?;
    Ok(match mode {
        CommentMode::RemoveAll => remove_all(source, &lexemes),
        CommentMode::AddTextual => add_textual(source, &lexemes, profile),
        CommentMode::AddCodeComments => add_code_comments(source, &lexemes, profile),
    })
}

/// Perturbs only the whole lines covering `span` inside `file_text`.
pub fn perturb_region(
    file_text: &str,
    span: Span,
    profile: &SubjectProfile,
    mode: CommentMode,
) -> Result<String, LexError> {
    let start = file_text[..span.start].rfind('\n').map_or(0, |i| i + 1);
    let end = file_text[span.end()..]
        .find('\n')
        .map_or(file_text.len(), |i| span.end() + i + 1);
    let block = perturb_comments(&file_text[start..end], profile, mode).map_err(|e| shift(e, start))?;
    Ok(format!("{}{}{}", &file_text[..start], block, &file_text[end..]))
}

fn shift(e: LexError, by: usize) -> LexError {
    match e {
        LexError::UnterminatedComment { offset } => LexError::UnterminatedComment { offset: offset + by },
        LexError::UnterminatedString { offset } => LexError::UnterminatedString { offset: offset + by },
        LexError::UnterminatedChar { offset } => LexError::UnterminatedChar { offset: offset + by },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::tokenize;

    const SAMPLE: &str = "int sum(int *xs, int n)\n{\n    /* running total */\n    int total = 0;\n    for (int i = 0; i < n; i++)\n        total += xs[i]; // accumulate\n    return total;\n}\n";

    fn c() -> SubjectProfile {
        SubjectProfile::c()
    }

    fn texts(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src, &c())
            .unwrap()
            .into_iter()
            .map(|t| (t.kind, t.text))
            .collect()
    }

    #[test]
    fn remove_all_drops_comment_lines() {
        let out = perturb_comments(SAMPLE, &c(), CommentMode::RemoveAll).unwrap();
        assert_eq!(
            out,
            "int sum(int *xs, int n)\n{\n    int total = 0;\n    for (int i = 0; i < n; i++)\n        total += xs[i];\n    return total;\n}\n"
        );
    }

    #[test]
    fn textual_comments_precede_statement_lines() {
        let out = perturb_comments(SAMPLE, &c(), CommentMode::AddTextual).unwrap();
        let marker = format!("// {TEXTUAL_COMMENT}");
        assert_eq!(out.matches(&marker).count(), 4);
        assert!(out.starts_with(&format!("{marker}\nint sum")));
        assert!(out.contains(&format!("    {marker}\n    return total;")));
    }

    #[test]
    fn code_comments_copy_each_line() {
        let src = "int f(int a)\n{\n    return a * 2;\n}\n";
        let out = perturb_comments(src, &c(), CommentMode::AddCodeComments).unwrap();
        assert_eq!(
            out,
            "// int f(int a)\nint f(int a)\n// {\n{\n    // return a * 2;\n    return a * 2;\n// }\n}\n"
        );
    }

    #[test]
    fn block_terminators_and_continuations_are_neutralized() {
        let src = "x = y; /* c */\n#define A 1 \\\n  + 2\nz = 1; \\\n";
        let out = perturb_comments(src, &c(), CommentMode::AddCodeComments).unwrap();
        assert!(out.contains("// x = y; /* c * /\n"));
        assert!(out.contains("// z = 1;\n"));
        assert!(!out.contains("// + 2"));
        assert_eq!(texts(&out), texts(src));
    }

    #[test]
    fn region_only_touches_its_lines() {
        let file = "// head\nint a;\nint f(void)\n{\n    return 1; // one\n}\n// tail\n";
        let start = file.find("int f").unwrap();
        let end = file.find("}\n// tail").unwrap() + 1;
        let out = perturb_region(file, Span::new(start, end - start), &c(), CommentMode::RemoveAll).unwrap();
        assert_eq!(out, "// head\nint a;\nint f(void)\n{\n    return 1;\n}\n// tail\n");
    }
}
