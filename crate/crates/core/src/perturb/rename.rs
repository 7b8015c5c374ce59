use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::plan::RenamePlan;
use crate::error::{Error, Result};
use crate::fsutil;
use crate::lang::{index_call_sites, resolve_function_scope, CallSiteIndex, ScopeMap, Span, SubjectProfile};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenameOutcome {
    /// Rewritten spans per relative file.
    pub edits: BTreeMap<PathBuf, usize>,
}

impl RenameOutcome {
    pub fn total(&self) -> usize {
        self.edits.values().sum()
    }
}

type Edits = BTreeMap<PathBuf, Vec<(Span, String, String)>>;

fn collect_edits(plan: &RenamePlan, file: &Path, scope: &ScopeMap, calls: Option<&CallSiteIndex>) -> Result<Edits> {
    let mut edits: Edits = BTreeMap::new();
    let occurrences = scope.occurrences_by_name();
    for (old, new) in &plan.vars {
        let spans = occurrences
            .get(old)
            .ok_or_else(|| Error::InvalidPlan(format!("{old} is not declared in {}", scope.function_name)))?;
        let list = edits.entry(file.to_path_buf()).or_default();
        list.extend(spans.iter().map(|s| (*s, old.clone(), new.clone())));
    }
    for (old, new) in &plan.funcs {
        let calls = calls
            .filter(|c| &c.function_name == old)
            .ok_or_else(|| Error::InvalidPlan(format!("no call-site index for {old}")))?;
        if calls.hazards.any() {
            return Err(Error::RenameHazard {
                function: old.clone(),
                details: calls.hazards.details.clone(),
            });
        }
        for site in calls.definitions.iter().chain(&calls.sites) {
            edits
                .entry(site.file.clone())
                .or_default()
                .push((site.span, old.clone(), new.clone()));
        }
    }
    for (path, list) in edits.iter_mut() {
        list.sort_by_key(|(s, _, _)| *s);
        list.dedup_by(|a, b| a.0 == b.0 && a.2 == b.2);
        for pair in list.windows(2) {
            if pair[0].0.overlaps(pair[1].0) {
                return Err(Error::SpanOverlap {
                    file: path.clone(),
                    offset: pair[1].0.start,
                });
            }
        }
    }
    Ok(edits)
}

fn rewrite(text: &str, path: &Path, edits: &[(Span, String, String)]) -> Result<String> {
    let mut out = String::with_capacity(text.len());
    let mut at = 0;
    for (span, old, new) in edits {
        if text.get(span.start..span.end()) != Some(old.as_str()) {
            return Err(Error::InvalidPlan(format!(
                "{}@{}: expected `{old}`",
                path.display(),
                span.start
            )));
        }
        out.push_str(&text[at..span.start]);
        out.push_str(new);
        at = span.end();
    }
    out.push_str(&text[at..]);
    Ok(out)
}

/// Writes a renamed copy of `src_root` to `dest_root`.
///
/// `file` is the function's file relative to the root and `scope` its scope
/// there. `calls` is required when the plan renames the function. All edits
/// are computed and checked before anything is written; `dest_root` may equal
/// `src_root` to rename in place.
pub fn apply_rename(
    src_root: &Path,
    dest_root: &Path,
    plan: &RenamePlan,
    file: &Path,
    scope: &ScopeMap,
    calls: Option<&CallSiteIndex>,
) -> Result<RenameOutcome> {
    let edits = collect_edits(plan, file, scope, calls)?;
    let mut rewritten = Vec::new();
    for (rel, list) in &edits {
        let text = fsutil::read_to_string(&src_root.join(rel))?;
        rewritten.push((rel.clone(), rewrite(&text, rel, list)?));
    }
    if src_root != dest_root {
        if dest_root.exists() && !fsutil::is_empty_dir(dest_root) {
            return Err(Error::WorkdirNotEmpty(dest_root.to_path_buf()));
        }
        fsutil::copy_dir_all(src_root, dest_root)?;
    }
    for (rel, text) in rewritten {
        fsutil::write(&dest_root.join(rel), text)?;
    }
    Ok(RenameOutcome {
        edits: edits.into_iter().map(|(k, v)| (k, v.len())).collect(),
    })
}

/// Re-reads a renamed tree and checks that no old name survives where it
/// was supposed to change.
pub fn verify_renamed(
    root: &Path,
    file: &Path,
    function_name: &str,
    occurrence: Option<usize>,
    plan: &RenamePlan,
    profile: &SubjectProfile,
) -> Result<()> {
    let current = plan
        .funcs
        .get(function_name)
        .map(String::as_str)
        .unwrap_or(function_name);
    let text = fsutil::read_to_string(&root.join(file))?;
    let scope = resolve_function_scope(&text, profile, current, occurrence)?;
    let declared = scope.variable_names();
    for (old, new) in &plan.vars {
        if declared.contains(old) {
            return Err(Error::InvalidPlan(format!("{old} is still declared after renaming")));
        }
        if !declared.contains(new) {
            return Err(Error::InvalidPlan(format!("{new} is not declared after renaming")));
        }
    }
    for old in plan.funcs.keys() {
        let left = index_call_sites(root, profile, old);
        if let Some(site) = left.definitions.iter().chain(&left.sites).next() {
            return Err(Error::InvalidPlan(format!(
                "{old} still referenced at {}@{}",
                site.file.display(),
                site.span.start
            )));
        }
    }
    Ok(())
}
