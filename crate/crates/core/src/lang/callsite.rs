use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::function::find_definitions;
use super::profile::SubjectProfile;
use super::token::{tokenize, Span, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Site {
    /// Relative to the indexed project root.
    pub file: PathBuf,
    pub span: Span,
}

/// Reasons a function cannot be renamed safely.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HazardReport {
    pub overloaded: bool,
    pub overridden_or_inherited: bool,
    pub reflective_or_string_refs: bool,
    pub details: String,
}

impl HazardReport {
    pub fn any(&self) -> bool {
        self.overloaded || self.overridden_or_inherited || self.reflective_or_string_refs
    }

    fn note(&mut self, line: String) {
        if !self.details.is_empty() {
            self.details.push_str("; ");
        }
        self.details.push_str(&line);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallSiteIndex {
    pub function_name: String,
    pub definitions: Vec<Site>,
    /// Calls and prototypes: every `name(` that is not a definition.
    pub sites: Vec<Site>,
    pub hazards: HazardReport,
}

/// Source files below `root` in path order.
pub fn source_files(root: &Path, profile: &SubjectProfile) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file() && profile.has_source_extension(e.path()))
        .map(|e| e.into_path())
        .collect();
    files.sort();
    files
}

fn contains_word(haystack: &str, word: &str, profile: &SubjectProfile) -> bool {
    haystack.match_indices(word).any(|(i, _)| {
        let before = haystack[..i].chars().next_back();
        let after = haystack[i + word.len()..].chars().next();
        !before.is_some_and(|c| profile.is_ident_continue(c)) && !after.is_some_and(|c| profile.is_ident_continue(c))
    })
}

/// Lists every definition and call of `function_name` in the project and
/// screens for renaming hazards.
pub fn index_call_sites(project_root: &Path, profile: &SubjectProfile, function_name: &str) -> CallSiteIndex {
    let mut index = CallSiteIndex {
        function_name: function_name.to_string(),
        definitions: Vec::new(),
        sites: Vec::new(),
        hazards: HazardReport::default(),
    };
    for path in source_files(project_root, profile) {
        let rel = path.strip_prefix(project_root).unwrap_or(&path).to_path_buf();
        let source = match std::fs::read_to_string(&path) {
            Ok(s) => s,
            Err(e) => {
                index.hazards.reflective_or_string_refs = true;
                index.hazards.note(format!("{}: unreadable ({e})", rel.display()));
                continue;
            }
        };
        if !source.contains(function_name) {
            continue;
        }
        let tokens = match tokenize(&source, profile) {
            Ok(t) => t,
            Err(e) => {
                index.hazards.reflective_or_string_refs = true;
                index.hazards.note(format!("{}: not tokenizable ({e})", rel.display()));
                continue;
            }
        };
        let defs: Vec<usize> = find_definitions(&tokens)
            .into_iter()
            .filter(|d| d.name == function_name)
            .map(|d| d.name_index)
            .collect();
        for (i, t) in tokens.iter().enumerate() {
            if t.kind == TokenKind::Literal {
                if contains_word(&t.text, function_name, profile) {
                    index.hazards.reflective_or_string_refs = true;
                    index
                        .hazards
                        .note(format!("{}@{}: name inside literal", rel.display(), t.span.start));
                }
                continue;
            }
            if !(t.is_ident() && t.text == function_name) {
                continue;
            }
            let site = Site {
                file: rel.clone(),
                span: t.span,
            };
            if defs.contains(&i) {
                index.definitions.push(site);
            } else if tokens.get(i + 1).is_some_and(|n| n.is_punct("(")) {
                index.sites.push(site);
            } else {
                index.hazards.reflective_or_string_refs = true;
                index
                    .hazards
                    .note(format!("{}@{}: referenced without a call", rel.display(), t.span.start));
            }
        }
    }
    let mut per_file: std::collections::BTreeMap<&Path, usize> = Default::default();
    for d in &index.definitions {
        *per_file.entry(d.file.as_path()).or_default() += 1;
    }
    if per_file.values().any(|&n| n > 1) {
        index.hazards.overloaded = true;
        index.hazards.note("multiple definitions in one file".to_string());
    }
    if per_file.len() > 1 {
        index.hazards.overridden_or_inherited = true;
        let files: Vec<String> = per_file.keys().map(|p| p.display().to_string()).collect();
        index
            .hazards
            .note(format!("defined in several files: {}", files.join(", ")));
    }
    index
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn project(files: &[(&str, &str)]) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        for (name, body) in files {
            let p = dir.path().join(name);
            fs::create_dir_all(p.parent().unwrap()).unwrap();
            fs::write(p, body).unwrap();
        }
        dir
    }

    #[test]
    fn three_sites_in_two_files() {
        let dir = project(&[
            (
                "src/a.c",
                "int twice(int x) { return 2 * x; }\nint four(int x) { return twice(twice(x)); }\n",
            ),
            (
                "tests/t.c",
                "// twice(1) in a comment\nint main(void) { return twice(1) != 2; }\n",
            ),
        ]);
        let idx = index_call_sites(dir.path(), &SubjectProfile::c(), "twice");
        assert_eq!(idx.definitions.len(), 1);
        assert_eq!(idx.sites.len(), 3);
        assert!(!idx.hazards.any(), "{:?}", idx.hazards);
    }

    #[test]
    fn sibling_definition_flags_inheritance() {
        let dir = project(&[
            ("A.java", "class A { int area() { return 1; } }"),
            (
                "B.java",
                "class B extends A { int area() { return 2; } int g() { return area(); } }",
            ),
        ]);
        let idx = index_call_sites(dir.path(), &SubjectProfile::java(), "area");
        assert!(idx.hazards.overridden_or_inherited);
        assert!(!idx.hazards.overloaded);
    }

    #[test]
    fn overload_in_one_file() {
        let dir = project(&[(
            "A.java",
            "class A { int f(int a) { return a; } int f(String s) { return 0; } }",
        )]);
        let idx = index_call_sites(dir.path(), &SubjectProfile::java(), "f");
        assert!(idx.hazards.overloaded);
    }

    #[test]
    fn string_only_reference() {
        let dir = project(&[(
            "A.java",
            "class A { Object m() throws Exception { return A.class.getMethod(\"hidden\"); } }",
        )]);
        let idx = index_call_sites(dir.path(), &SubjectProfile::java(), "hidden");
        assert_eq!(idx.sites.len(), 0);
        assert!(idx.hazards.reflective_or_string_refs);
    }

    #[test]
    fn bare_reference_is_a_hazard() {
        let dir = project(&[(
            "a.c",
            "static int cb(int v) { return v; }\nint (*table[])(int) = { cb };\n",
        )]);
        let idx = index_call_sites(dir.path(), &SubjectProfile::c(), "cb");
        assert!(idx.hazards.reflective_or_string_refs);
        assert!(idx.hazards.details.contains("without a call"));
    }

    #[test]
    fn prefix_names_are_not_matches() {
        let dir = project(&[(
            "a.c",
            "int parse(void) { return 0; }\nint parse_all(void) { return parse(); }\nconst char *s = \"parser\";\n",
        )]);
        let idx = index_call_sites(dir.path(), &SubjectProfile::c(), "parse");
        assert_eq!(idx.sites.len(), 1);
        assert!(!idx.hazards.any());
    }
}
