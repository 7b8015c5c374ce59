use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ingest::CloneCandidate;
use crate::corpus::BugInstance;
use crate::error::{Error, Result};
use crate::fsutil;
use crate::lang::{locate_function, strip_comments_and_ws, SubjectProfile};
use crate::llm::{extract_source, CompletionRequest, LlmGateway};
use crate::synth::{CandidateStatus, HistoryEntry};

/// Extra requests after an unusable answer.
pub const REASKS: usize = 2;

/// A host project with one injected defect and, once generated, a test for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectedVariant {
    pub clone_origin: CloneCandidate,
    pub original_function: String,
    pub buggy_function: String,
    /// Whole target file with the defect in place.
    pub buggy_file: String,
    /// Relative to the host root.
    pub test_file: PathBuf,
    pub test_name: String,
    #[serde(default)]
    pub test_source: Option<String>,
    pub refine_iterations: u32,
    pub status: CandidateStatus,
    #[serde(default)]
    pub history: Vec<HistoryEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl InjectedVariant {
    fn rejected(c: &CloneCandidate, reason: String) -> Self {
        InjectedVariant {
            clone_origin: c.clone(),
            original_function: String::new(),
            buggy_function: String::new(),
            buggy_file: String::new(),
            test_file: PathBuf::new(),
            test_name: String::new(),
            test_source: None,
            refine_iterations: 0,
            status: CandidateStatus::Rejected,
            history: Vec::new(),
            error: Some(reason),
        }
    }

    /// Host copy with the test added, and the defect too unless `original`.
    pub fn materialize(&self, original: bool, dest: &Path) -> Result<()> {
        if dest.exists() && !fsutil::is_empty_dir(dest) {
            return Err(Error::WorkdirNotEmpty(dest.to_path_buf()));
        }
        fsutil::copy_dir_all(&self.clone_origin.host_root, dest)?;
        if !original {
            fsutil::write(&dest.join(&self.clone_origin.path), &self.buggy_file)?;
        }
        if let Some(test) = &self.test_source {
            fsutil::write(&dest.join(&self.test_file), test)?;
        }
        Ok(())
    }
}

fn strip(text: &str, profile: &SubjectProfile) -> std::result::Result<String, String> {
    strip_comments_and_ws(text, profile).map_err(|e| e.to_string())
}

fn first_difference(a: &str, b: &str) -> String {
    let (la, lb): (Vec<&str>, Vec<&str>) = (a.lines().collect(), b.lines().collect());
    let n = la.iter().zip(&lb).take_while(|(x, y)| x.trim() == y.trim()).count();
    format!(
        "line {}:\n- {}\n+ {}",
        n + 1,
        la.get(n).copied().unwrap_or("<end>"),
        lb.get(n).copied().unwrap_or("<end>")
    )
}

/// Puts the model's version of `name` into `file`. The answer may be the
/// function alone or the whole file; in the latter case nothing outside the
/// function may change.
pub fn splice_function(
    file: &str,
    name: &str,
    answer: &str,
    profile: &SubjectProfile,
) -> std::result::Result<(String, String), String> {
    let (_, old) = locate_function(file, profile, name).map_err(|e| format!("target file: {e}"))?;
    let (_, new) = locate_function(answer, profile, name).map_err(|e| format!("answer: {e}"))?;
    let (a_pre, a_post) = (&answer[..new.span.start], &answer[new.span.end()..]);
    let whole_file = !strip(a_pre, profile)?.is_empty() || !strip(a_post, profile)?.is_empty();
    if whole_file {
        let (f_pre, f_post) = (&file[..old.span.start], &file[old.span.end()..]);
        if strip(a_pre, profile)? != strip(f_pre, profile)? {
            return Err(format!("edits outside `{name}`, {}", first_difference(f_pre, a_pre)));
        }
        if strip(a_post, profile)? != strip(f_post, profile)? {
            return Err(format!("edits outside `{name}`, {}", first_difference(f_post, a_post)));
        }
    }
    let new_fn = new.text(answer).to_string();
    if strip(&new_fn, profile)? == strip(old.text(file), profile)? {
        return Err(format!("`{name}` is unchanged; no defect was introduced"));
    }
    let spliced = format!("{}{}{}", &file[..old.span.start], new_fn, &file[old.span.end()..]);
    Ok((spliced, new_fn))
}

/// Few-shot injection of the parent's defect pattern into the candidate's
/// function. The result is unverified and has no test yet.
pub fn inject_bug(
    c: &CloneCandidate,
    parent: &BugInstance,
    profile: &SubjectProfile,
    llm: &LlmGateway,
) -> Result<InjectedVariant> {
    if !c.exists_verified {
        return Err(Error::InvalidRequest(format!(
            "{} was not verified to exist",
            c.describe()
        )));
    }
    let scaffold = profile
        .scaffold
        .as_ref()
        .ok_or_else(|| Error::Config(format!("profile {} has no scaffold", profile.name)))?;
    let file = fsutil::read_to_string(&c.host_root.join(&c.path))?;
    let (_, def) = locate_function(&file, profile, &c.function_name)?;
    let original_function = def.text(&file).to_string();
    let mut feedback = String::new();
    let mut last = String::new();
    for round in 0..=REASKS {
        let req = CompletionRequest::new("analyze.inject")
            .slot("language", profile.name.clone())
            .slot("exemplar_buggy", parent.buggy_function.text.clone())
            .slot("exemplar_fixed", parent.fixed_function.text.clone())
            .slot("function_name", c.function_name.clone())
            .slot("path", c.path.display().to_string())
            .slot("source", file.clone())
            .slot("feedback", feedback.clone());
        let answer = llm.complete(&req)?;
        let outcome = match extract_source(&answer) {
            Some(src) => splice_function(&file, &c.function_name, &src, profile),
            None => Err("no <<<SOURCE>>> block".to_string()),
        };
        match outcome {
            Ok((buggy_file, buggy_function)) => {
                let (test_name, name_file) = scaffold.test_file_for(&c.function_name);
                let dir = c
                    .test_dir
                    .clone()
                    .unwrap_or_else(|| name_file.parent().map(PathBuf::from).unwrap_or_default());
                let file_name = name_file.file_name().map(PathBuf::from).unwrap_or_default();
                return Ok(InjectedVariant {
                    clone_origin: c.clone(),
                    original_function,
                    buggy_function,
                    buggy_file,
                    test_file: dir.join(file_name),
                    test_name,
                    test_source: None,
                    refine_iterations: 0,
                    status: CandidateStatus::Unverified,
                    history: Vec::new(),
                    error: None,
                });
            }
            Err(reason) => {
                feedback = format!("\nAttempt {} was rejected: {reason}\n", round + 1);
                last = reason;
            }
        }
    }
    Ok(InjectedVariant::rejected(c, last))
}

/// Listing of the host's test directory for the prompt.
fn test_layout(v: &InjectedVariant) -> String {
    let c = &v.clone_origin;
    match &c.test_dir {
        Some(dir) => {
            let files: Vec<String> = fsutil::relative_files(&c.host_root.join(dir))
                .into_iter()
                .map(|f| dir.join(f).display().to_string())
                .collect();
            format!("{}\n(new test goes in {})", files.join("\n"), v.test_file.display())
        }
        None => format!(
            "The project has no tests; the new test is the first, at {}",
            v.test_file.display()
        ),
    }
}

/// Asks for a test that fails on the injected bug and passes on the
/// original function.
pub fn generate_tests(
    mut v: InjectedVariant,
    parent_failure: &str,
    profile: &SubjectProfile,
    llm: &LlmGateway,
) -> Result<InjectedVariant> {
    if v.status != CandidateStatus::Unverified {
        return Ok(v);
    }
    let mut feedback = String::new();
    for round in 0..=REASKS {
        let req = CompletionRequest::new("analyze.tests")
            .slot("language", profile.name.clone())
            .slot("function_name", v.clone_origin.function_name.clone())
            .slot("path", v.clone_origin.path.display().to_string())
            .slot("original_function", v.original_function.clone())
            .slot("buggy_function", v.buggy_function.clone())
            .slot("exemplar_failure", parent_failure)
            .slot("test_layout", test_layout(&v))
            .slot("test_file", v.test_file.display().to_string())
            .slot("feedback", feedback.clone());
        let answer = llm.complete(&req)?;
        if let Some(src) = extract_source(&answer) {
            v.test_source = Some(src);
            return Ok(v);
        }
        feedback = format!("\nAttempt {} had no <<<SOURCE>>> block.\n", round + 1);
    }
    v.status = CandidateStatus::Rejected;
    v.error = Some("no test source after re-asks".into());
    Ok(v)
}
