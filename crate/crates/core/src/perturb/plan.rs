use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::RenameTargets;
use crate::error::{Error, Result};
use crate::lang::{source_files, tokenize, ScopeMap, SubjectProfile, TokenKind};
use crate::llm::{parse_json_map, CompletionRequest, LlmGateway};

/// Rounds of asking the model before giving up on a name.
pub const REPHRASE_ROUNDS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenameScheme {
    Hash,
    Rephrase,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenamePlan {
    pub scheme: RenameScheme,
    pub targets: RenameTargets,
    /// Parameters and locals.
    pub vars: BTreeMap<String, String>,
    pub funcs: BTreeMap<String, String>,
    pub clock_stamp: Option<u64>,
}

impl RenamePlan {
    pub fn entries(&self) -> BTreeMap<String, String> {
        let mut all = self.vars.clone();
        all.extend(self.funcs.iter().map(|(k, v)| (k.clone(), v.clone())));
        all
    }

    /// The same plan without variables missing from `declared`.
    pub fn restricted_to(&self, declared: &BTreeSet<String>) -> RenamePlan {
        let mut plan = self.clone();
        plan.vars.retain(|k, _| declared.contains(k));
        plan
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty() && self.funcs.is_empty()
    }

    /// New names are valid, distinct, and unused anywhere in `taken`.
    pub fn validate(&self, profile: &SubjectProfile, taken: &BTreeSet<String>) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (old, new) in self.vars.iter().chain(&self.funcs) {
            let problem = if !profile.is_valid_identifier(new) {
                Some("not a valid identifier")
            } else if taken.contains(new) {
                Some("already in use")
            } else if !seen.insert(new.clone()) {
                Some("assigned twice")
            } else {
                None
            };
            if let Some(p) = problem {
                return Err(Error::InvalidPlan(format!("{old} -> {new}: {p}")));
            }
        }
        Ok(())
    }
}

/// `prefix` + first 16 hex digits of SHA-256 over `name|stamp`, with
/// `|salt` appended when re-salting.
pub fn hash_name(prefix: &str, name: &str, stamp: u64, salt: usize) -> String {
    let input = if salt == 0 {
        format!("{name}|{stamp}")
    } else {
        format!("{name}|{stamp}|{salt}")
    };
    let digest = hex::encode(Sha256::digest(input.as_bytes()));
    format!("{prefix}{}", &digest[..16])
}

/// Hash names for the given variables and functions, avoiding `taken`.
pub fn hash_plan_for_names(
    vars: &BTreeSet<String>,
    funcs: &BTreeSet<String>,
    targets: RenameTargets,
    stamp: u64,
    taken: &BTreeSet<String>,
) -> Result<RenamePlan> {
    if stamp == 0 {
        return Err(Error::InvalidPlan("clock stamp must be positive".into()));
    }
    let mut used: BTreeSet<String> = taken.clone();
    let mut assign = |prefix: &str, names: &BTreeSet<String>| {
        let mut out = BTreeMap::new();
        for name in names {
            let mut salt = 0;
            let mut new = hash_name(prefix, name, stamp, salt);
            while used.contains(&new) {
                salt += 1;
                new = hash_name(prefix, name, stamp, salt);
            }
            used.insert(new.clone());
            out.insert(name.clone(), new);
        }
        out
    };
    let funcs = if targets.includes_funcs() {
        assign("f_", funcs)
    } else {
        BTreeMap::new()
    };
    let vars = if targets.includes_vars() {
        assign("v_", vars)
    } else {
        BTreeMap::new()
    };
    Ok(RenamePlan {
        scheme: RenameScheme::Hash,
        targets,
        vars,
        funcs,
        clock_stamp: Some(stamp),
    })
}

/// Hash plan for one function's scope.
pub fn hash_rename_plan(
    scope: &ScopeMap,
    targets: RenameTargets,
    stamp: u64,
    taken: &BTreeSet<String>,
) -> Result<RenamePlan> {
    let mut avoid = taken.clone();
    avoid.extend(scope.free_names.iter().cloned());
    avoid.extend(scope.variable_names());
    avoid.insert(scope.function_name.clone());
    hash_plan_for_names(
        &scope.variable_names(),
        &BTreeSet::from([scope.function_name.clone()]),
        targets,
        stamp,
        &avoid,
    )
}

/// Every identifier in every source file below `root`.
pub fn project_identifiers(root: &Path, profile: &SubjectProfile) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for file in source_files(root, profile) {
        let Ok(text) = std::fs::read_to_string(&file) else {
            continue;
        };
        let Ok(tokens) = tokenize(&text, profile) else { continue };
        out.extend(
            tokens
                .into_iter()
                .filter(|t| t.kind == TokenKind::Identifier)
                .map(|t| t.text),
        );
    }
    out
}

fn check_proposal(
    old: &str,
    new: Option<&String>,
    profile: &SubjectProfile,
    taken: &BTreeSet<String>,
    assigned: &BTreeSet<String>,
) -> std::result::Result<String, String> {
    let new = new.ok_or("no name proposed")?.trim().to_string();
    if profile.is_keyword(&new) {
        return Err(format!("`{new}` is a keyword"));
    }
    if !profile.is_valid_identifier(&new) {
        return Err(format!("`{new}` is not a valid identifier"));
    }
    if new == old {
        return Err("name unchanged".into());
    }
    if taken.contains(&new) {
        return Err(format!("`{new}` is already used in the project"));
    }
    if assigned.contains(&new) {
        return Err(format!("`{new}` was proposed for another identifier"));
    }
    Ok(new)
}

/// Names proposed by the model, each checked mechanically. Rejected names are
/// asked for again, up to [`REPHRASE_ROUNDS`] rounds in all.
#[allow(clippy::too_many_arguments)]
pub fn rephrase_plan_for_names(
    function_source: &str,
    vars: &BTreeSet<String>,
    funcs: &BTreeSet<String>,
    targets: RenameTargets,
    taken: &BTreeSet<String>,
    profile: &SubjectProfile,
    llm: &LlmGateway,
) -> Result<RenamePlan> {
    let mut wanted: BTreeMap<String, bool> = BTreeMap::new();
    if targets.includes_vars() {
        wanted.extend(vars.iter().map(|v| (v.clone(), false)));
    }
    if targets.includes_funcs() {
        wanted.extend(funcs.iter().map(|f| (f.clone(), true)));
    }
    let mut plan = RenamePlan {
        scheme: RenameScheme::Rephrase,
        targets,
        vars: BTreeMap::new(),
        funcs: BTreeMap::new(),
        clock_stamp: None,
    };
    let mut avoid = taken.clone();
    avoid.extend(wanted.keys().cloned());
    let mut assigned = BTreeSet::new();
    let mut feedback = String::new();
    for _ in 0..REPHRASE_ROUNDS {
        let remaining: Vec<&String> = wanted
            .keys()
            .filter(|k| !plan.vars.contains_key(*k) && !plan.funcs.contains_key(*k))
            .collect();
        if remaining.is_empty() {
            break;
        }
        let req = CompletionRequest::new("apply.rephrase")
            .slot("language", profile.name.clone())
            .slot("function_source", function_source)
            .slot(
                "names",
                remaining.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("\n"),
            )
            .slot("taken", avoid.iter().cloned().collect::<Vec<_>>().join(" "))
            .slot("feedback", feedback.clone());
        let response = llm.complete(&req)?;
        let proposals = match parse_json_map(&response) {
            Ok(m) => m,
            Err(e) => {
                feedback = format!("\nYour previous answer could not be used ({e}). Answer with one JSON object.\n");
                continue;
            }
        };
        let mut rejected = Vec::new();
        for old in remaining {
            match check_proposal(old, proposals.get(old), profile, &avoid, &assigned) {
                Ok(new) => {
                    assigned.insert(new.clone());
                    if wanted[old] {
                        plan.funcs.insert(old.clone(), new);
                    } else {
                        plan.vars.insert(old.clone(), new);
                    }
                }
                Err(reason) => rejected.push(format!("- {old}: {reason}")),
            }
        }
        feedback = if rejected.is_empty() {
            String::new()
        } else {
            format!(
                "\nThese proposals were rejected, suggest different names:\n{}\n",
                rejected.join("\n")
            )
        };
    }
    let missing: Vec<String> = wanted
        .keys()
        .filter(|k| !plan.vars.contains_key(*k) && !plan.funcs.contains_key(*k))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::PartialPlan(missing));
    }
    Ok(plan)
}

pub fn rephrase_rename_plan(
    function_source: &str,
    scope: &ScopeMap,
    targets: RenameTargets,
    taken: &BTreeSet<String>,
    profile: &SubjectProfile,
    llm: &LlmGateway,
) -> Result<RenamePlan> {
    let mut avoid = taken.clone();
    avoid.extend(scope.free_names.iter().cloned());
    rephrase_plan_for_names(
        function_source,
        &scope.variable_names(),
        &BTreeSet::from([scope.function_name.clone()]),
        targets,
        &avoid,
        profile,
        llm,
    )
}
