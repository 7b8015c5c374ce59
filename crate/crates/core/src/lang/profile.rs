use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const JAVA_PROFILE: &str = include_str!("../../profiles/java.json");
const C_PROFILE: &str = include_str!("../../profiles/c.json");

/// Lexical description of a subject language.
///
/// Profiles are plain data: a new C-family language is supported by writing
/// a JSON file with these fields, no code changes needed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectProfile {
    pub name: String,
    pub line_comment: String,
    pub block_comment: (String, String),
    pub string_delims: Vec<String>,
    pub char_delim: String,
    /// Characters allowed in identifiers besides letters, digits and `_`.
    #[serde(default)]
    pub identifier_extra: String,
    /// Lines starting with this prefix are preprocessor directives and
    /// treated as trivia.
    #[serde(default)]
    pub directive_prefix: Option<String>,
    pub source_extensions: Vec<String>,
    /// Whether `name(...)` may call through a local variable (function
    /// pointers). When false, a call never refers to a local.
    #[serde(default)]
    pub callable_variables: bool,
    pub punctuation: String,
    /// Multi-character operators. Single characters need not be listed.
    pub operators: Vec<String>,
    pub keywords: BTreeSet<String>,
    /// Keywords that may begin a local declaration (`int`, `final`, ...).
    pub type_keywords: BTreeSet<String>,
    /// Minimal project layout for generated single-file programs.
    #[serde(default)]
    pub scaffold: Option<Scaffold>,
}

/// One source file plus one test file, with the commands that build and
/// test them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scaffold {
    pub source_path: PathBuf,
    pub test_path: PathBuf,
    pub build_cmd: String,
    pub test_cmd: String,
    #[serde(default)]
    pub trigger_test_cmd: Option<String>,
    pub trigger_tests: Vec<String>,
    /// Name of a generated test for function `{name}`, without extension.
    #[serde(default = "default_test_name")]
    pub test_name: String,
    /// Layout instructions handed to the model.
    #[serde(default)]
    pub notes: String,
}

fn default_test_name() -> String {
    "test_{name}".into()
}

impl Scaffold {
    /// Directory and file name of a generated test for `function`.
    pub fn test_file_for(&self, function: &str) -> (String, PathBuf) {
        let name = self.test_name.replace("{name}", function);
        let dir = self.test_path.parent().map(PathBuf::from).unwrap_or_default();
        let file = match self.test_path.extension() {
            Some(ext) => format!("{name}.{}", ext.to_string_lossy()),
            None => name.clone(),
        };
        (name, dir.join(file))
    }
}

impl SubjectProfile {
    pub fn java() -> Self {
        serde_json::from_str(JAVA_PROFILE).expect("bundled java profile parses")
    }

    pub fn c() -> Self {
        serde_json::from_str(C_PROFILE).expect("bundled c profile parses")
    }

    /// Looks up a bundled profile by language name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "java" => Some(Self::java()),
            "c" => Some(Self::c()),
            _ => None,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Resolves a language name against `profiles/<lang>.json` under `dir`
    /// first, then the bundled profiles.
    pub fn resolve(name: &str, dir: Option<&Path>) -> Result<Self> {
        if let Some(dir) = dir {
            let candidate = dir.join(format!("{name}.json"));
            if candidate.is_file() {
                return Self::from_json_file(&candidate);
            }
        }
        Self::builtin(name).ok_or_else(|| Error::UnknownProfile(name.to_string()))
    }

    pub fn is_ident_start(&self, c: char) -> bool {
        c == '_' || c.is_alphabetic() || self.identifier_extra.contains(c)
    }

    pub fn is_ident_continue(&self, c: char) -> bool {
        c == '_' || c.is_alphanumeric() || self.identifier_extra.contains(c)
    }

    pub fn is_keyword(&self, word: &str) -> bool {
        self.keywords.contains(word)
    }

    /// True when `name` is a well-formed, non-keyword identifier.
    pub fn is_valid_identifier(&self, name: &str) -> bool {
        let mut chars = name.chars();
        match chars.next() {
            Some(c) if self.is_ident_start(c) => {}
            _ => return false,
        }
        chars.all(|c| self.is_ident_continue(c)) && !self.is_keyword(name)
    }

    pub fn has_source_extension(&self, path: &Path) -> bool {
        path.extension()
            .and_then(|e| e.to_str())
            .is_some_and(|ext| self.source_extensions.iter().any(|s| s == ext))
    }
}

impl Default for SubjectProfile {
    fn default() -> Self {
        Self::java()
    }
}
