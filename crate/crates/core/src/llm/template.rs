use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fsutil;

const BUILTIN: &[(&str, &str)] = &[
    (
        "understand.root_cause.analyze",
        include_str!("templates/understand.root_cause.analyze.txt"),
    ),
    (
        "understand.root_cause.generate",
        include_str!("templates/understand.root_cause.generate.txt"),
    ),
    (
        "understand.behavior.generate",
        include_str!("templates/understand.behavior.generate.txt"),
    ),
    ("refine.compile", include_str!("templates/refine.compile.txt")),
    ("refine.test", include_str!("templates/refine.test.txt")),
    ("apply.rephrase", include_str!("templates/apply.rephrase.txt")),
    ("analyze.inject", include_str!("templates/analyze.inject.txt")),
    ("analyze.tests", include_str!("templates/analyze.tests.txt")),
];

/// Prompt templates by id. `{{name}}` marks a slot.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: BTreeMap<String, String>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet::builtin()
    }
}

fn slot_at(text: &str, i: usize) -> Option<(&str, usize)> {
    let rest = text[i..].strip_prefix("{{")?;
    let end = rest.find("}}")?;
    let name = &rest[..end];
    let valid = !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    valid.then_some((name, i + 2 + end + 2))
}

impl TemplateSet {
    pub fn builtin() -> Self {
        TemplateSet {
            templates: BUILTIN.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }

    /// Builtins overridden by any `<id>.txt` found in `dir`.
    pub fn with_overrides(dir: &Path) -> Result<Self> {
        let mut set = TemplateSet::builtin();
        for file in fsutil::relative_files(dir) {
            let Some(name) = file.to_str().and_then(|n| n.strip_suffix(".txt")) else {
                continue;
            };
            set.templates
                .insert(name.to_string(), fsutil::read_to_string(&dir.join(&file))?);
        }
        Ok(set)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }

    pub fn get(&self, id: &str) -> Result<&str> {
        self.templates
            .get(id)
            .map(String::as_str)
            .ok_or_else(|| Error::UnknownTemplate(id.to_string()))
    }

    pub fn slots(&self, id: &str) -> Result<BTreeSet<String>> {
        let text = self.get(id)?;
        let mut out = BTreeSet::new();
        let mut i = 0;
        while let Some(pos) = text[i..].find("{{") {
            let at = i + pos;
            match slot_at(text, at) {
                Some((name, next)) => {
                    out.insert(name.to_string());
                    i = next;
                }
                None => i = at + 2,
            }
        }
        Ok(out)
    }

    /// Substitutes every slot in one pass; slot values are not rescanned.
    pub fn render(&self, id: &str, slots: &BTreeMap<String, String>) -> Result<String> {
        let text = self.get(id)?;
        let mut out = String::with_capacity(text.len());
        let mut i = 0;
        while let Some(pos) = text[i..].find("{{") {
            let at = i + pos;
            out.push_str(&text[i..at]);
            match slot_at(text, at) {
                Some((name, next)) => {
                    let value = slots.get(name).ok_or_else(|| Error::MissingSlot {
                        template: id.to_string(),
                        slot: name.to_string(),
                    })?;
                    out.push_str(value);
                    i = next;
                }
                None => {
                    out.push_str("{{");
                    i = at + 2;
                }
            }
        }
        out.push_str(&text[i..]);
        Ok(out)
    }
}

pub fn render_prompt(template_id: &str, slots: &BTreeMap<String, String>) -> Result<String> {
    TemplateSet::builtin().render(template_id, slots)
}
