use std::collections::BTreeMap;

use super::candidate::{CandidateStatus, SynthCandidate};
use crate::corpus::{BugInstance, TransformScheme};
use crate::error::{Error, Result};
use crate::lang::{locate_function, strip_comments_and_ws, SubjectProfile};
use crate::llm::{parse_triples, CompletionRequest, LlmGateway, Triple};

/// Extra requests for slots whose output was malformed or a copy.
pub const REASKS: usize = 2;

/// What the generator knows about the parent bug besides its code.
#[derive(Debug, Clone, Default)]
pub struct SynthContext {
    pub failing_output: String,
}

/// One way of prompting for synthetic bugs.
pub trait SynthMode: Send + Sync {
    fn name(&self) -> &'static str;
    fn scheme(&self) -> TransformScheme;

    /// Raw model text holding up to `count` triples.
    fn request(
        &self,
        bug: &BugInstance,
        profile: &SubjectProfile,
        ctx: &SynthContext,
        count: usize,
        feedback: &str,
        llm: &LlmGateway,
    ) -> Result<String>;
}

fn scaffold_notes(profile: &SubjectProfile) -> String {
    profile.scaffold.as_ref().map(|s| s.notes.clone()).unwrap_or_default()
}

pub struct RootCauseMode;

impl SynthMode for RootCauseMode {
    fn name(&self) -> &'static str {
        "root_cause"
    }

    fn scheme(&self) -> TransformScheme {
        TransformScheme::SyntheticRootCause
    }

    fn request(
        &self,
        bug: &BugInstance,
        profile: &SubjectProfile,
        ctx: &SynthContext,
        count: usize,
        feedback: &str,
        llm: &LlmGateway,
    ) -> Result<String> {
        let analyze = CompletionRequest::new("understand.root_cause.analyze")
            .slot("language", profile.name.clone())
            .slot("project", bug.project.clone())
            .slot("function_name", bug.function_name.clone())
            .slot("buggy_function", bug.buggy_function.text.clone())
            .slot("fixed_function", bug.fixed_function.text.clone())
            .slot("failing_output", ctx.failing_output.clone());
        let analysis = llm.complete(&analyze)?;
        let generate = CompletionRequest::new("understand.root_cause.generate")
            .slot("analysis", analysis.trim())
            .slot("function_name", bug.function_name.clone())
            .slot("buggy_function", bug.buggy_function.text.clone())
            .slot("count", count.to_string())
            .slot("scaffold_notes", scaffold_notes(profile))
            .slot("language", profile.name.clone())
            .slot("feedback", feedback);
        llm.complete(&generate)
    }
}

pub struct BehaviorMode;

impl SynthMode for BehaviorMode {
    fn name(&self) -> &'static str {
        "behavior"
    }

    fn scheme(&self) -> TransformScheme {
        TransformScheme::SyntheticBehavior
    }

    fn request(
        &self,
        bug: &BugInstance,
        profile: &SubjectProfile,
        ctx: &SynthContext,
        count: usize,
        feedback: &str,
        llm: &LlmGateway,
    ) -> Result<String> {
        let req = CompletionRequest::new("understand.behavior.generate")
            .slot("language", profile.name.clone())
            .slot("project", bug.project.clone())
            .slot("function_name", bug.function_name.clone())
            .slot("buggy_function", bug.buggy_function.text.clone())
            .slot("fixed_function", bug.fixed_function.text.clone())
            .slot("failing_output", ctx.failing_output.clone())
            .slot("count", count.to_string())
            .slot("scaffold_notes", scaffold_notes(profile))
            .slot("feedback", feedback);
        llm.complete(&req)
    }
}

pub struct SynthModes {
    modes: BTreeMap<String, Box<dyn SynthMode>>,
}

impl Default for SynthModes {
    fn default() -> Self {
        let mut r = SynthModes { modes: BTreeMap::new() };
        r.register(Box::new(RootCauseMode));
        r.register(Box::new(BehaviorMode));
        r
    }
}

impl SynthModes {
    pub fn register(&mut self, mode: Box<dyn SynthMode>) {
        self.modes.insert(mode.name().to_string(), mode);
    }

    pub fn names(&self) -> Vec<&str> {
        self.modes.keys().map(String::as_str).collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn SynthMode> {
        self.modes
            .get(name)
            .map(|m| m.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "synth mode",
                name: name.to_string(),
            })
    }
}

fn stripped(text: &str, profile: &SubjectProfile) -> Option<String> {
    strip_comments_and_ws(text, profile).ok()
}

/// Why a parsed triple cannot be used, if it cannot.
fn screen(t: &Triple, parent: &BugInstance, profile: &SubjectProfile) -> Option<String> {
    if !profile.is_valid_identifier(&t.function_name) {
        return Some(format!("FUNCTION `{}` is not an identifier", t.function_name));
    }
    for (label, src) in [("buggy", &t.buggy), ("fixed", &t.fixed)] {
        if let Err(e) = locate_function(src, profile, &t.function_name) {
            return Some(format!("{label} source: {e}"));
        }
    }
    let (_, def) = locate_function(&t.buggy, profile, &t.function_name).ok()?;
    let own = stripped(def.text(&t.buggy), profile);
    if own.is_some() && own == stripped(&parent.buggy_function.text, profile) {
        return Some("buggy function is a copy of the original".into());
    }
    if stripped(&t.buggy, profile) == stripped(&t.fixed, profile) {
        return Some("buggy and fixed sources are identical".into());
    }
    None
}

/// Asks for `n` triples. Unusable slots are asked for again up to
/// [`REASKS`] times and then returned as rejected candidates, so the result
/// always has `n` entries.
pub fn synthesize_variants(
    bug: &BugInstance,
    profile: &SubjectProfile,
    mode: &dyn SynthMode,
    n: usize,
    ctx: &SynthContext,
    llm: &LlmGateway,
) -> Result<Vec<SynthCandidate>> {
    if n == 0 {
        return Err(Error::Config("candidate count must be at least 1".into()));
    }
    let mut accepted: Vec<SynthCandidate> = Vec::new();
    let mut problems: Vec<String> = Vec::new();
    let mut feedback = String::new();
    for round in 0..=REASKS {
        let wanted = n - accepted.len();
        let text = mode.request(bug, profile, ctx, wanted, &feedback, llm)?;
        problems.clear();
        let parsed = parse_triples(&text);
        for (k, item) in parsed.into_iter().enumerate() {
            let issue = match &item {
                Ok(t) => screen(t, bug, profile),
                Err(e) => Some(e.clone()),
            };
            match (item, issue) {
                (Ok(t), None) if accepted.len() < n => accepted.push(SynthCandidate {
                    parent_id: bug.id.clone(),
                    mode: mode.name().to_string(),
                    function_name: t.function_name,
                    buggy_source: t.buggy,
                    fixed_source: t.fixed,
                    test_source: t.test,
                    iteration: 0,
                    status: CandidateStatus::Unverified,
                    review_flag: false,
                    history: Vec::new(),
                    error: None,
                }),
                (_, Some(p)) => problems.push(format!("program {}: {p}", k + 1)),
                _ => {}
            }
        }
        if accepted.len() >= n {
            break;
        }
        feedback = format!(
            "\nAttempt {} of your answer had problems:\n{}\nWrite {} more programs in the required layout.\n",
            round + 1,
            if problems.is_empty() {
                "too few programs".to_string()
            } else {
                problems.join("\n")
            },
            n - accepted.len()
        );
    }
    let reason = if problems.is_empty() {
        "too few programs returned".to_string()
    } else {
        problems.join("; ")
    };
    while accepted.len() < n {
        accepted.push(SynthCandidate::rejected(&bug.id, mode.name(), reason.clone()));
    }
    Ok(accepted)
}
