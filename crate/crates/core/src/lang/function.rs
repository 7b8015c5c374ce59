use super::profile::SubjectProfile;
use super::token::{tokenize, Span, Token, TokenKind};
use crate::error::{Error, Result};

/// Keywords that can directly precede a call but never a declared name.
const NON_DECL_KEYWORDS: &[&str] = &[
    "new",
    "return",
    "throw",
    "else",
    "case",
    "do",
    "goto",
    "sizeof",
    "instanceof",
    "assert",
    "yield",
    "await",
];

/// A function definition located in a token stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDef {
    pub name: String,
    /// Token indices.
    pub name_index: usize,
    pub decl_start: usize,
    pub params_open: usize,
    pub params_close: usize,
    pub body_open: usize,
    pub body_close: usize,
    /// Bytes from the first declaration token through the closing brace.
    pub span: Span,
    pub name_span: Span,
}

impl FunctionDef {
    pub fn text<'s>(&self, source: &'s str) -> &'s str {
        &source[self.span.start..self.span.end()]
    }
}

/// Maps each bracket token index to its partner. Unbalanced brackets map to
/// nothing.
pub fn match_brackets(tokens: &[Token]) -> Vec<Option<usize>> {
    let mut partner = vec![None; tokens.len()];
    let mut stack: Vec<(usize, char)> = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        if t.kind != TokenKind::Punctuation {
            continue;
        }
        match t.text.as_str() {
            "(" => stack.push((i, ')')),
            "[" => stack.push((i, ']')),
            "{" => stack.push((i, '}')),
            ")" | "]" | "}" => {
                let close = t.text.chars().next().unwrap();
                if let Some(pos) = stack.iter().rposition(|(_, want)| *want == close) {
                    let (open, _) = stack[pos];
                    stack.truncate(pos);
                    partner[open] = Some(i);
                    partner[i] = Some(open);
                }
            }
            _ => {}
        }
    }
    partner
}

fn can_precede_name(t: &Token) -> bool {
    match t.kind {
        TokenKind::Identifier => true,
        TokenKind::Keyword => !NON_DECL_KEYWORDS.contains(&t.text.as_str()),
        TokenKind::Operator => matches!(t.text.as_str(), "*" | ">" | ">>" | ">>>" | "&"),
        TokenKind::Punctuation => t.text == "]",
        TokenKind::Literal => false,
    }
}

/// Finds every function definition in a token stream.
pub fn find_definitions(tokens: &[Token]) -> Vec<FunctionDef> {
    let partner = match_brackets(tokens);
    let mut defs = Vec::new();
    for i in 0..tokens.len() {
        if !tokens[i].is_ident() || i == 0 {
            continue;
        }
        if !tokens.get(i + 1).is_some_and(|t| t.is_punct("(")) {
            continue;
        }
        if !can_precede_name(&tokens[i - 1]) {
            continue;
        }
        let Some(close) = partner[i + 1] else { continue };
        // Allow trailing qualifiers such as `throws A, B` or `const`.
        let mut j = close + 1;
        while let Some(t) = tokens.get(j) {
            let ok = matches!(t.kind, TokenKind::Identifier | TokenKind::Keyword) || t.is_punct(",") || t.is_punct(".");
            if !ok {
                break;
            }
            j += 1;
        }
        if !tokens.get(j).is_some_and(|t| t.is_punct("{")) {
            continue;
        }
        let Some(body_close) = partner[j] else { continue };
        let mut start = i;
        while start > 0 {
            let prev = &tokens[start - 1];
            if prev.is_punct(";") || prev.is_punct("{") || prev.is_punct("}") {
                break;
            }
            start -= 1;
        }
        let first = tokens[start].span.start;
        let last = tokens[body_close].span.end();
        defs.push(FunctionDef {
            name: tokens[i].text.clone(),
            name_index: i,
            decl_start: start,
            params_open: i + 1,
            params_close: close,
            body_open: j,
            body_close,
            span: Span::new(first, last - first),
            name_span: tokens[i].span,
        });
    }
    defs
}

/// Locates the single definition of `name` in `source`.
pub fn locate_function(source: &str, profile: &SubjectProfile, name: &str) -> Result<(Vec<Token>, FunctionDef)> {
    locate_function_nth(source, profile, name, None)
}

/// Locates a definition of `name`. With `occurrence` set, picks the n-th
/// (0-based) same-name definition instead of requiring a unique one.
pub fn locate_function_nth(
    source: &str,
    profile: &SubjectProfile,
    name: &str,
    occurrence: Option<usize>,
) -> Result<(Vec<Token>, FunctionDef)> {
    let tokens = tokenize(source, profile)?;
    let mut matches: Vec<FunctionDef> = find_definitions(&tokens)
        .into_iter()
        .filter(|d| d.name == name)
        .collect();
    let not_found = || Error::FunctionNotFound { name: name.to_string() };
    match (matches.len(), occurrence) {
        (0, _) => Err(not_found()),
        (_, Some(n)) if n < matches.len() => Ok((tokens, matches.swap_remove(n))),
        (_, Some(_)) => Err(not_found()),
        (1, None) => Ok((tokens, matches.remove(0))),
        (count, None) => Err(Error::AmbiguousFunction {
            name: name.to_string(),
            count,
        }),
    }
}

/// Replaces the text of `name`'s definition with `replacement`.
pub fn replace_function(
    source: &str,
    profile: &SubjectProfile,
    name: &str,
    occurrence: Option<usize>,
    replacement: &str,
) -> Result<String> {
    let (_, def) = locate_function_nth(source, profile, name, occurrence)?;
    let mut out = String::with_capacity(source.len() + replacement.len());
    out.push_str(&source[..def.span.start]);
    out.push_str(replacement);
    out.push_str(&source[def.span.end()..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const JAVA: &str = r#"
package x;
/** Parses. */
public class P {
    private int count = 0;
    @Override
    public String toString() { return "P"; }

    static int parseIndex(String s) throws NumberFormatException, IllegalStateException {
        if (s.isEmpty()) { return -1; }
        return Integer.parseInt(s);
    }
    void run() {
        Runnable r = new Runnable() { public void run() { parseIndex("1"); } };
        while (count < 3) { count++; }
    }
}
"#;

    #[test]
    fn finds_methods_not_calls() {
        let p = SubjectProfile::java();
        let toks = tokenize(JAVA, &p).unwrap();
        let names: Vec<_> = find_definitions(&toks).into_iter().map(|d| d.name).collect();
        assert_eq!(names, vec!["toString", "parseIndex", "run", "run"]);
    }

    #[test]
    fn definition_span_includes_modifiers_and_annotations() {
        let p = SubjectProfile::java();
        let (_, def) = locate_function(JAVA, &p, "toString").unwrap();
        assert!(def.text(JAVA).starts_with("@Override"));
        assert!(def.text(JAVA).ends_with('}'));
        let (_, def) = locate_function(JAVA, &p, "parseIndex").unwrap();
        assert!(def.text(JAVA).starts_with("static int parseIndex"));
    }

    #[test]
    fn nth_occurrence_disambiguates() {
        let p = SubjectProfile::java();
        let (_, second) = locate_function_nth(JAVA, &p, "run", Some(1)).unwrap();
        assert!(second.text(JAVA).starts_with("public void run"));
        assert!(locate_function_nth(JAVA, &p, "run", Some(2)).is_err());
    }

    #[test]
    fn ambiguous_and_missing() {
        let p = SubjectProfile::java();
        assert!(matches!(
            locate_function(JAVA, &p, "run"),
            Err(Error::AmbiguousFunction { count: 2, .. })
        ));
        assert!(matches!(
            locate_function(JAVA, &p, "nope"),
            Err(Error::FunctionNotFound { .. })
        ));
    }

    #[test]
    fn c_functions_after_directives() {
        let src = "#include <stdlib.h>\nstatic const char *skip(const char *p) {\n  while (*p == ' ') p++;\n  return p;\n}\nint main(void) { return skip(\"x\") != 0; }\n";
        let p = SubjectProfile::c();
        let (_, def) = locate_function(src, &p, "skip").unwrap();
        assert!(def.text(src).starts_with("static const char *skip"));
        let replaced =
            replace_function(src, &p, "skip", None, "const char *skip(const char *p) { return p; }").unwrap();
        assert!(replaced.contains("{ return p; }\nint main"));
    }
}
