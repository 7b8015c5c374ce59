//! Lexical front-end for subject-language sources.
//!
//! No parse tree is built. Everything downstream (normalization for patch
//! judgment, scope resolution for renaming, call-site indexing) works on the
//! token stream plus bracket matching.

mod callsite;
mod function;
mod profile;
mod scope;
mod token;

pub use callsite::{index_call_sites, source_files, CallSiteIndex, HazardReport, Site};
pub use function::{
    find_definitions, locate_function, locate_function_nth, match_brackets, replace_function, FunctionDef,
};
pub use profile::{Scaffold, SubjectProfile};
pub use scope::{resolve_definition, resolve_function_scope, Binding, ScopeMap};
pub use token::{
    join_tokens, lex, strip_comments_and_ws, tokenize, LexError, Lexeme, Span, Token, TokenKind, TriviaKind,
};
