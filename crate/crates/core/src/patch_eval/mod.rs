//! Judging candidate patches: plausible (tests pass), exact match and
//! syntactic equivalence against the oracle fix.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{checkout, BugInstance};
use crate::error::{Error, Result};
use crate::fsutil;
use crate::harness::{execute_build_test, ExecLimits};
use crate::lang::{replace_function, strip_comments_and_ws, tokenize, LexError, SubjectProfile, TokenKind};

/// One candidate fix, one line of `patches.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Patch {
    pub bug_id: String,
    pub variant_id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub producer: String,
    pub attempt: u32,
    pub file: PathBuf,
    pub function_name: String,
    pub replacement: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchVerdict {
    pub bug_id: String,
    pub variant_id: String,
    pub producer: String,
    pub attempt: u32,
    pub compiled: bool,
    pub pp: bool,
    pub sye: bool,
    pub em: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// A verdict plus the build and test output behind it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Judgment {
    pub verdict: PatchVerdict,
    pub log: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantSolved {
    pub bug_id: String,
    pub variant_id: String,
    pub attempts: u32,
    pub solved_pp: bool,
    pub solved_sye: bool,
    pub solved_em: bool,
}

impl VariantSolved {
    /// A variant counts as solved under a metric if any attempt satisfies it.
    pub fn from_verdicts(variant: &BugInstance, verdicts: &[&PatchVerdict]) -> Self {
        VariantSolved {
            bug_id: variant.parent_id.clone(),
            variant_id: variant.id.clone(),
            attempts: verdicts.len() as u32,
            solved_pp: verdicts.iter().any(|v| v.pp),
            solved_sye: verdicts.iter().any(|v| v.pp && v.sye),
            solved_em: verdicts.iter().any(|v| v.pp && v.em),
        }
    }
}

pub fn read_patches(path: &Path) -> Result<Vec<Patch>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let p = serde_json::from_str(&line).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: format!("line {}: {e}", n + 1),
        })?;
        out.push(p);
    }
    Ok(out)
}

pub fn write_patches(path: &Path, patches: &[Patch]) -> Result<()> {
    let mut buf = Vec::new();
    for p in patches {
        serde_json::to_writer(&mut buf, p).expect("patch serializes");
        buf.write_all(b"\n").expect("write to memory");
    }
    fsutil::write(path, buf)
}

pub fn em_equal(patch: &str, oracle: &str, profile: &SubjectProfile) -> std::result::Result<bool, LexError> {
    Ok(strip_comments_and_ws(patch, profile)? == strip_comments_and_ws(oracle, profile)?)
}

/// Identifier tokens become ID1, ID2, ... by first appearance.
pub fn canonical_tokens(
    text: &str,
    profile: &SubjectProfile,
) -> std::result::Result<Vec<(TokenKind, String)>, LexError> {
    let mut names: HashMap<String, usize> = HashMap::new();
    Ok(tokenize(text, profile)?
        .into_iter()
        .map(|t| {
            if t.kind == TokenKind::Identifier {
                let next = names.len() + 1;
                let k = *names.entry(t.text).or_insert(next);
                (TokenKind::Identifier, format!("ID{k}"))
            } else {
                (t.kind, t.text)
            }
        })
        .collect())
}

pub fn sye_equal(patch: &str, oracle: &str, profile: &SubjectProfile) -> std::result::Result<bool, LexError> {
    Ok(canonical_tokens(patch, profile)? == canonical_tokens(oracle, profile)?)
}

/// Exact match after dropping comments and whitespace. Untokenizable input
/// is never a match.
pub fn judge_em(patch_text: &str, oracle_text: &str, profile: &SubjectProfile) -> bool {
    em_equal(patch_text, oracle_text, profile).unwrap_or_else(|e| {
        log::warn!("exact-match check skipped: {e}");
        false
    })
}

/// Equality up to a consistent renaming of identifiers.
pub fn judge_sye(patch_text: &str, oracle_text: &str, profile: &SubjectProfile) -> bool {
    sye_equal(patch_text, oracle_text, profile).unwrap_or_else(|e| {
        log::warn!("equivalence check skipped: {e}");
        false
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PpOutcome {
    pub compiled: bool,
    pub passed: bool,
    pub log: String,
    /// Set when the patch could not be applied at all.
    pub error: Option<String>,
}

impl PpOutcome {
    fn rejected(error: String) -> Self {
        PpOutcome {
            log: error.clone(),
            error: Some(error),
            ..Default::default()
        }
    }
}

fn safe_relative(p: &Path) -> bool {
    !p.as_os_str().is_empty() && p.components().all(|c| matches!(c, Component::Normal(_)))
}

/// Applies the patch to a fresh buggy checkout in `workdir` and runs the
/// build and full test command.
pub fn judge_pp(
    patch: &Patch,
    variant: &BugInstance,
    profile: &SubjectProfile,
    workdir: &Path,
    limits: &ExecLimits,
) -> Result<PpOutcome> {
    if !safe_relative(&patch.file) {
        return Ok(PpOutcome::rejected(format!(
            "patch file {} is not a project path",
            patch.file.display()
        )));
    }
    if workdir.exists() {
        std::fs::remove_dir_all(workdir).map_err(|e| Error::io(workdir, e))?;
    }
    checkout(variant, false, workdir)?;
    let target = workdir.join(&patch.file);
    let source = match std::fs::read_to_string(&target) {
        Ok(s) => s,
        Err(e) => {
            return Ok(PpOutcome::rejected(format!(
                "cannot read {}: {e}",
                patch.file.display()
            )))
        }
    };
    let occurrence = (patch.function_name == variant.function_name && patch.file == variant.buggy_function.file)
        .then_some(variant.function_occurrence)
        .flatten();
    let patched = match replace_function(&source, profile, &patch.function_name, occurrence, &patch.replacement) {
        Ok(s) => s,
        Err(e) => return Ok(PpOutcome::rejected(format!("locator: {e}"))),
    };
    fsutil::write(&target, patched)?;
    let build = execute_build_test(workdir, &variant.build_cmd, limits);
    let mut log = format!("$ build\n{}", build.log());
    if !build.success() {
        return Ok(PpOutcome {
            log,
            ..Default::default()
        });
    }
    let tests = execute_build_test(workdir, &variant.test_cmd, limits);
    log.push_str(&format!("\n$ test\n{}", tests.log()));
    Ok(PpOutcome {
        compiled: true,
        passed: tests.success(),
        log,
        error: None,
    })
}

/// Judges one patch fully. Equivalence is only checked for plausible patches.
pub fn judge_patch(
    patch: &Patch,
    variant: &BugInstance,
    profile: &SubjectProfile,
    workdir: &Path,
    limits: &ExecLimits,
) -> Judgment {
    let mut verdict = PatchVerdict {
        bug_id: patch.bug_id.clone(),
        variant_id: patch.variant_id.clone(),
        producer: patch.producer.clone(),
        attempt: patch.attempt,
        compiled: false,
        pp: false,
        sye: false,
        em: false,
        error: None,
    };
    if patch.variant_id != variant.id || patch.bug_id != variant.parent_id {
        verdict.error = Some(format!("patch targets {}/{}", patch.bug_id, patch.variant_id));
        return Judgment {
            verdict,
            log: String::new(),
        };
    }
    let log = match judge_pp(patch, variant, profile, workdir, limits) {
        Ok(out) => {
            verdict.compiled = out.compiled;
            verdict.pp = out.passed;
            verdict.error = out.error;
            out.log
        }
        Err(e) => {
            verdict.error = Some(e.to_string());
            String::new()
        }
    };
    if verdict.pp {
        let oracle = &variant.fixed_function.text;
        verdict.em = judge_em(&patch.replacement, oracle, profile);
        verdict.sye = judge_sye(&patch.replacement, oracle, profile);
    }
    let _ = std::fs::remove_dir_all(workdir);
    Judgment { verdict, log }
}

/// Judges every attempt for one variant.
pub fn evaluate_patch_set(
    patches: &[Patch],
    variant: &BugInstance,
    profile: &SubjectProfile,
    scratch: &Path,
    limits: &ExecLimits,
) -> (VariantSolved, Vec<Judgment>) {
    let judgments: Vec<Judgment> = patches
        .iter()
        .enumerate()
        .map(|(i, p)| judge_patch(p, variant, profile, &scratch.join(format!("attempt-{i}")), limits))
        .collect();
    let verdicts: Vec<&PatchVerdict> = judgments.iter().map(|j| &j.verdict).collect();
    (VariantSolved::from_verdicts(variant, &verdicts), judgments)
}
