use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::function::{locate_function_nth, match_brackets, FunctionDef};
use super::profile::SubjectProfile;
use super::token::{Span, Token, TokenKind};
use crate::error::Result;

/// One declared name and every place it is referenced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binding {
    pub name: String,
    pub decl_span: Span,
    /// Includes the declaring occurrence. Sorted by offset.
    pub occurrences: Vec<Span>,
}

/// Names declared inside one function and where they occur.
///
/// A name may appear in more than one binding when sibling or nested blocks
/// redeclare it; each binding owns only the occurrences that resolve to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeMap {
    pub function_name: String,
    pub declaration_span: Span,
    pub name_span: Span,
    pub params: Vec<Binding>,
    pub locals: Vec<Binding>,
    pub free_names: BTreeSet<String>,
}

impl ScopeMap {
    pub fn variable_names(&self) -> BTreeSet<String> {
        self.params.iter().chain(&self.locals).map(|b| b.name.clone()).collect()
    }

    /// All occurrence spans of each declared name, merged across bindings.
    pub fn occurrences_by_name(&self) -> BTreeMap<String, Vec<Span>> {
        let mut out: BTreeMap<String, Vec<Span>> = BTreeMap::new();
        for b in self.params.iter().chain(&self.locals) {
            out.entry(b.name.clone())
                .or_default()
                .extend(b.occurrences.iter().copied());
        }
        for spans in out.values_mut() {
            spans.sort();
            spans.dedup();
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct Region {
    first: usize,
    last: usize,
}

impl Region {
    fn contains(&self, i: usize) -> bool {
        self.first <= i && i <= self.last
    }
}

#[derive(Debug)]
struct Decl {
    name_index: usize,
    region: Region,
}

struct Resolver<'a> {
    tokens: &'a [Token],
    partner: Vec<Option<usize>>,
    profile: &'a SubjectProfile,
    def: &'a FunctionDef,
    /// Innermost `{` enclosing each token inside the body.
    enclosing: Vec<Option<usize>>,
}

fn is_decl_terminator(t: &Token) -> bool {
    t.is_op("=") || t.is_punct(";") || t.is_punct(",") || t.is_punct("[")
}

impl<'a> Resolver<'a> {
    fn new(tokens: &'a [Token], profile: &'a SubjectProfile, def: &'a FunctionDef) -> Self {
        let partner = match_brackets(tokens);
        let mut enclosing = vec![None; tokens.len()];
        let mut stack = Vec::new();
        for (i, t) in tokens.iter().enumerate().take(def.body_close + 1).skip(def.body_open) {
            if t.is_punct("}") {
                stack.pop();
            }
            enclosing[i] = stack.last().copied();
            if t.is_punct("{") {
                stack.push(i);
            }
        }
        Self {
            tokens,
            partner,
            profile,
            def,
            enclosing,
        }
    }

    fn tok(&self, i: usize) -> Option<&Token> {
        if i <= self.def.body_close {
            self.tokens.get(i)
        } else {
            None
        }
    }

    fn params(&self) -> Vec<usize> {
        let mut names = Vec::new();
        let mut group: Vec<usize> = Vec::new();
        let mut depth = 0i32;
        let open = self.def.params_open;
        let close = self.def.params_close;
        for i in open + 1..=close {
            let t = &self.tokens[i];
            let at_end = i == close;
            if !at_end && depth == 0 && t.is_punct(",") {
                names.extend(self.param_name(&group));
                group.clear();
                continue;
            }
            if at_end {
                names.extend(self.param_name(&group));
                break;
            }
            if t.is_punct("(") || t.is_punct("[") || t.is_op("<") {
                depth += 1;
            } else if t.is_punct(")") || t.is_punct("]") || t.is_op(">") {
                depth -= 1;
            } else if t.is_op(">>") {
                depth -= 2;
            } else if t.is_op(">>>") {
                depth -= 3;
            }
            group.push(i);
        }
        names
    }

    fn param_name(&self, group: &[usize]) -> Option<usize> {
        // Function pointer: `int (*cb)(int)`
        for w in group.windows(4) {
            let [a, b, c, d] = [w[0], w[1], w[2], w[3]].map(|i| &self.tokens[i]);
            if a.is_punct("(") && b.is_op("*") && c.is_ident() && d.is_punct(")") {
                return Some(w[2]);
            }
        }
        let pos = group.iter().rposition(|&i| self.tokens[i].is_ident())?;
        if pos == 0 {
            return None;
        }
        let prev = &self.tokens[group[pos - 1]];
        let typed = matches!(prev.kind, TokenKind::Identifier | TokenKind::Keyword)
            || prev.is_op("*")
            || prev.is_op("&")
            || prev.is_op(">")
            || prev.is_op(">>")
            || prev.is_op("...")
            || prev.is_punct("]");
        typed.then_some(group[pos])
    }

    /// Attempts to read a declaration starting at token `k`. Returns the
    /// indices of declared names.
    fn declaration_at(&self, k: usize, header: bool) -> Vec<usize> {
        let mut p = k;
        // annotations
        while self.tok(p).is_some_and(|t| t.is_punct("@")) {
            p += 2;
            if self.tok(p).is_some_and(|t| t.is_punct("(")) {
                match self.partner[p] {
                    Some(c) => p = c + 1,
                    None => return Vec::new(),
                }
            }
        }
        let mut saw_type = false;
        while let Some(t) = self.tok(p) {
            if t.kind == TokenKind::Keyword && self.profile.type_keywords.contains(&t.text) {
                saw_type = true;
                let tagged = matches!(t.text.as_str(), "struct" | "union" | "enum");
                p += 1;
                if tagged && self.tok(p).is_some_and(Token::is_ident) {
                    p += 1;
                }
            } else {
                break;
            }
        }
        if let (Some(t), Some(next)) = (self.tok(p), self.tok(p + 1)) {
            let type_like_next = next.is_ident()
                || next.is_op("<")
                || next.is_punct("[")
                || next.is_op("*")
                || next.is_op("&")
                || next.is_punct(".")
                || next.is_op("::")
                || next.is_op("...");
            if t.is_ident() && type_like_next {
                saw_type = true;
                p += 1;
                while self.tok(p).is_some_and(|t| t.is_punct(".") || t.is_op("::"))
                    && self.tok(p + 1).is_some_and(Token::is_ident)
                {
                    p += 2;
                }
            }
        }
        if !saw_type {
            return Vec::new();
        }
        if self.tok(p).is_some_and(|t| t.is_op("<")) {
            let mut depth = 0i32;
            loop {
                let Some(t) = self.tok(p) else { return Vec::new() };
                match t.text.as_str() {
                    "<" => depth += 1,
                    ">" => depth -= 1,
                    ">>" => depth -= 2,
                    ">>>" => depth -= 3,
                    ";" | "{" | "}" | "=" => return Vec::new(),
                    _ => {}
                }
                p += 1;
                if depth <= 0 {
                    break;
                }
            }
        }
        loop {
            match self.tok(p) {
                Some(t) if t.is_punct("[") && self.tok(p + 1).is_some_and(|n| n.is_punct("]")) => p += 2,
                Some(t) if t.is_op("*") || t.is_op("&") || t.is_op("...") => p += 1,
                Some(t) if t.kind == TokenKind::Keyword && self.profile.type_keywords.contains(&t.text) => p += 1,
                _ => break,
            }
        }
        let Some(name) = self.tok(p) else { return Vec::new() };
        let Some(next) = self.tok(p + 1) else { return Vec::new() };
        if !name.is_ident() {
            return Vec::new();
        }
        let ok = is_decl_terminator(next) || (header && (next.text == ":" || next.is_punct(")")));
        if !ok {
            return Vec::new();
        }
        let mut names = vec![p];
        // further declarators: `int a = 1, *b, c[3];`
        let mut i = p + 1;
        while let Some(t) = self.tok(i) {
            if t.is_punct(";") || (header && t.text == ":") || t.is_punct(")") || t.is_punct("}") {
                break;
            }
            if t.is_punct("(") || t.is_punct("[") || t.is_punct("{") {
                match self.partner[i] {
                    Some(c) => {
                        i = c + 1;
                        continue;
                    }
                    None => break,
                }
            }
            if t.is_punct(",") {
                let mut q = i + 1;
                while self.tok(q).is_some_and(|t| t.is_op("*") || t.is_op("&")) {
                    q += 1;
                }
                if let (Some(n), Some(after)) = (self.tok(q), self.tok(q + 1)) {
                    if n.is_ident() && is_decl_terminator(after) {
                        names.push(q);
                        i = q + 1;
                        continue;
                    }
                }
                if header {
                    break;
                }
            }
            i += 1;
        }
        names
    }

    /// End of the statement that follows a `for (...)`/`catch (...)` header.
    fn statement_after(&self, close_paren: usize) -> usize {
        let next = close_paren + 1;
        match self.tok(next) {
            Some(t) if t.is_punct("{") => self.partner[next].unwrap_or(self.def.body_close),
            _ => {
                let mut i = next;
                while let Some(t) = self.tok(i) {
                    if t.is_punct("{") || t.is_punct("(") || t.is_punct("[") {
                        if let Some(c) = self.partner[i] {
                            i = c + 1;
                            continue;
                        }
                    }
                    if t.is_punct(";") || t.is_punct("}") {
                        return i;
                    }
                    i += 1;
                }
                self.def.body_close
            }
        }
    }

    fn collect_decls(&self) -> Vec<Decl> {
        let def = self.def;
        let mut decls = Vec::new();
        for k in def.body_open + 1..def.body_close {
            let prev = &self.tokens[k - 1];
            let block_start = prev.is_punct("{") || prev.is_punct(";") || prev.is_punct("}");
            let header_kw = prev.is_punct("(")
                && self.tokens[k - 2].kind == TokenKind::Keyword
                && matches!(self.tokens[k - 2].text.as_str(), "for" | "catch" | "try");
            // the `;`-separated parts of a for header are not declarations
            if block_start && !header_kw {
                let inside_header = prev.is_punct(";") && self.in_paren_header(k);
                if inside_header {
                    continue;
                }
                let names = self.declaration_at(k, false);
                let block_end = self.enclosing[k]
                    .and_then(|b| self.partner[b])
                    .unwrap_or(def.body_close);
                for n in names {
                    decls.push(Decl {
                        name_index: n,
                        region: Region {
                            first: n,
                            last: block_end,
                        },
                    });
                }
            } else if header_kw {
                let names = self.declaration_at(k, true);
                let close = self.partner[k - 1].unwrap_or(def.body_close);
                let end = self.statement_after(close);
                for n in names {
                    decls.push(Decl {
                        name_index: n,
                        region: Region { first: n, last: end },
                    });
                }
            }
        }
        decls
    }

    fn in_paren_header(&self, k: usize) -> bool {
        // walk back to an unmatched `(` before reaching a brace
        let mut depth = 0i32;
        let mut i = k;
        while i > self.def.body_open {
            i -= 1;
            let t = &self.tokens[i];
            if t.is_punct(")") {
                depth += 1;
            } else if t.is_punct("(") {
                if depth == 0 {
                    return true;
                }
                depth -= 1;
            } else if t.is_punct("{") || t.is_punct("}") {
                return false;
            }
        }
        false
    }

    fn is_reference(&self, i: usize) -> bool {
        let t = &self.tokens[i];
        if !t.is_ident() {
            return false;
        }
        if i > 0 {
            let prev = &self.tokens[i - 1];
            if prev.is_punct(".") || prev.is_op("->") || prev.is_op("::") || prev.is_punct("@") {
                return false;
            }
        }
        true
    }
}

/// Resolves parameters and locals of `def` within an already tokenized source.
pub fn resolve_definition(tokens: &[Token], profile: &SubjectProfile, def: &FunctionDef) -> ScopeMap {
    let r = Resolver::new(tokens, profile, def);
    let whole = Region {
        first: def.params_open,
        last: def.body_close,
    };
    let params: Vec<Decl> = r
        .params()
        .into_iter()
        .map(|n| Decl {
            name_index: n,
            region: whole,
        })
        .collect();
    let locals = r.collect_decls();

    let n_params = params.len();
    let all: Vec<&Decl> = params.iter().chain(&locals).collect();
    let mut occurrences: Vec<Vec<Span>> = vec![Vec::new(); all.len()];
    let mut free_names = BTreeSet::new();
    let callable_vars = profile.callable_variables;

    for i in def.params_open..=def.body_close {
        if !r.is_reference(i) {
            continue;
        }
        let t = &tokens[i];
        let is_call = tokens.get(i + 1).is_some_and(|n| n.is_punct("("));
        let owner = all
            .iter()
            .enumerate()
            .filter(|(_, d)| tokens[d.name_index].text == t.text && d.region.contains(i))
            .max_by_key(|(_, d)| d.name_index)
            .map(|(idx, _)| idx);
        match owner {
            Some(idx) if !is_call || callable_vars => occurrences[idx].push(t.span),
            _ => {
                if !is_call {
                    free_names.insert(t.text.clone());
                }
            }
        }
    }

    let bindings: Vec<Binding> = all
        .iter()
        .zip(occurrences)
        .map(|(d, occ)| Binding {
            name: tokens[d.name_index].text.clone(),
            decl_span: tokens[d.name_index].span,
            occurrences: occ,
        })
        .collect();
    let mut bindings = bindings.into_iter();
    let params: Vec<Binding> = bindings.by_ref().take(n_params).collect();
    let locals: Vec<Binding> = bindings.collect();
    for b in params.iter().chain(&locals) {
        free_names.remove(&b.name);
    }

    ScopeMap {
        function_name: def.name.clone(),
        declaration_span: def.span,
        name_span: def.name_span,
        params,
        locals,
        free_names,
    }
}

/// Resolves the parameters and locals of `function_name` in `source`.
///
/// Fails when the function is missing, or defined more than once and no
/// `occurrence` picks one.
pub fn resolve_function_scope(
    source: &str,
    profile: &SubjectProfile,
    function_name: &str,
    occurrence: Option<usize>,
) -> Result<ScopeMap> {
    let (tokens, def) = locate_function_nth(source, profile, function_name, occurrence)?;
    Ok(resolve_definition(&tokens, profile, &def))
}
