use std::path::Path;

use super::inject::{splice_function, InjectedVariant};
use crate::error::{Error, Result};
use crate::fsutil;
use crate::harness::{execute_build_test, tail, ExecLimits};
use crate::lang::SubjectProfile;
use crate::llm::{extract_source, CompletionRequest, LlmGateway};
use crate::synth::{CandidateStatus, HistoryEntry, Part, VerifyOutcome, LOG_TAIL};

impl InjectedVariant {
    /// Command running only the generated test.
    pub fn trigger_command(&self) -> String {
        match &self.clone_origin.trigger_test_cmd {
            Some(t) => t.replace("{test}", &self.test_name),
            None => self.clone_origin.test_cmd.clone(),
        }
    }
}

/// Builds the injected and original hosts, each with the generated test, and
/// checks that the test fails only on the injected one.
pub fn verify_injected(v: &InjectedVariant, workdir: &Path, limits: &ExecLimits) -> Result<VerifyOutcome> {
    if v.test_source.is_none() {
        return Err(Error::InvalidRequest("variant has no test yet".into()));
    }
    if workdir.exists() {
        std::fs::remove_dir_all(workdir).map_err(|e| Error::io(workdir, e))?;
    }
    let buggy = workdir.join("buggy");
    let original = workdir.join("original");
    v.materialize(false, &buggy)?;
    v.materialize(true, &original)?;
    let c = &v.clone_origin;
    let build_b = execute_build_test(&buggy, &c.build_cmd, limits);
    let build_o = execute_build_test(&original, &c.build_cmd, limits);
    if !build_o.success() {
        return Ok(VerifyOutcome::CompileFail {
            part: Part::Test,
            log: tail(&build_o.log(), LOG_TAIL),
        });
    }
    if !build_b.success() {
        return Ok(VerifyOutcome::CompileFail {
            part: Part::Buggy,
            log: tail(&build_b.log(), LOG_TAIL),
        });
    }
    let trigger = execute_build_test(&buggy, &v.trigger_command(), limits);
    if trigger.success() {
        return Ok(VerifyOutcome::TestNotFailingOnBuggy {
            log: tail(&trigger.log(), LOG_TAIL),
        });
    }
    let suite = execute_build_test(&original, &c.test_cmd, limits);
    if !suite.success() {
        return Ok(VerifyOutcome::TestFailingOnFixed {
            log: tail(&suite.log(), LOG_TAIL),
        });
    }
    Ok(VerifyOutcome::Ok)
}

fn regenerate(
    v: &mut InjectedVariant,
    outcome: &VerifyOutcome,
    profile: &SubjectProfile,
    llm: &LlmGateway,
) -> Result<Part> {
    let feedback = format!("\nRefinement attempt {}.\n", v.refine_iterations + 1);
    let test = v.test_source.clone().unwrap_or_default();
    if let VerifyOutcome::CompileFail { part: Part::Buggy, log } = outcome {
        let req = CompletionRequest::new("refine.compile")
            .slot("language", profile.name.clone())
            .slot("part", "buggy function")
            .slot("source", v.buggy_function.clone())
            .slot("context", test)
            .slot("log", log.clone())
            .slot("feedback", feedback);
        let answer = llm.complete(&req)?;
        let host_file = fsutil::read_to_string(&v.clone_origin.host_root.join(&v.clone_origin.path))?;
        match extract_source(&answer)
            .map(|src| splice_function(&host_file, &v.clone_origin.function_name, &src, profile))
        {
            Some(Ok((file, function))) => {
                v.buggy_file = file;
                v.buggy_function = function;
            }
            Some(Err(reason)) => log::warn!("refined injection unusable: {reason}"),
            None => log::warn!("refined injection has no source block"),
        }
        return Ok(Part::Buggy);
    }
    let (problem, log) = match outcome {
        VerifyOutcome::CompileFail { log, .. } => ("it does not compile", log),
        VerifyOutcome::TestNotFailingOnBuggy { log } => ("it passes on the buggy source", log),
        VerifyOutcome::TestFailingOnFixed { log } => ("the test suite fails on the original source", log),
        VerifyOutcome::Ok => unreachable!("only failures are regenerated"),
    };
    let req = CompletionRequest::new("refine.test")
        .slot("language", profile.name.clone())
        .slot("problem", problem)
        .slot("buggy_source", v.buggy_function.clone())
        .slot("fixed_source", v.original_function.clone())
        .slot("source", test)
        .slot("log", log.clone())
        .slot("feedback", feedback);
    let answer = llm.complete(&req)?;
    match extract_source(&answer) {
        Some(src) => v.test_source = Some(src),
        None => log::warn!("refined test has no source block"),
    }
    Ok(Part::Test)
}

/// Verify, regenerate the offending part, repeat; ends verified or rejected
/// after at most `max_iters` refinements.
pub fn verify_refine(
    mut v: InjectedVariant,
    profile: &SubjectProfile,
    llm: &LlmGateway,
    workdir: &Path,
    limits: &ExecLimits,
    max_iters: u32,
) -> Result<InjectedVariant> {
    while v.status == CandidateStatus::Unverified {
        let outcome = verify_injected(&v, workdir, limits)?;
        let mut entry = HistoryEntry {
            iteration: v.refine_iterations,
            outcome: outcome.label().to_string(),
            regenerated: None,
        };
        if outcome.is_ok() {
            v.status = CandidateStatus::Verified;
        } else if v.refine_iterations >= max_iters {
            v.status = CandidateStatus::Rejected;
            let log = match &outcome {
                VerifyOutcome::CompileFail { log, .. }
                | VerifyOutcome::TestNotFailingOnBuggy { log }
                | VerifyOutcome::TestFailingOnFixed { log } => log.as_str(),
                VerifyOutcome::Ok => "",
            };
            v.error = Some(format!("{} after {max_iters} refinements:\n{log}", outcome.label()));
        } else {
            entry.regenerated = Some(regenerate(&mut v, &outcome, profile, llm)?);
            v.refine_iterations += 1;
        }
        v.history.push(entry);
    }
    let _ = std::fs::remove_dir_all(workdir);
    Ok(v)
}
