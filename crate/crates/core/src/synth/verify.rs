use std::path::Path;

use super::candidate::{CandidateStatus, HistoryEntry, Part, SynthCandidate, VerifyOutcome};
use crate::error::{Error, Result};
use crate::harness::{execute_build_test, tail, ExecLimits};
use crate::lang::{Scaffold, SubjectProfile};
use crate::llm::{extract_source, CompletionRequest, LlmGateway};

pub const DEFAULT_MAX_REFINE_ITERS: u32 = 3;

/// Bytes of build or test output kept for prompts and records.
pub const LOG_TAIL: usize = 4000;

/// Builds both sides of the candidate in `workdir` and checks the
/// fail-on-buggy, pass-on-fixed contract.
pub fn verify_candidate(
    c: &SynthCandidate,
    scaffold: &Scaffold,
    workdir: &Path,
    limits: &ExecLimits,
) -> Result<VerifyOutcome> {
    if workdir.exists() {
        std::fs::remove_dir_all(workdir).map_err(|e| Error::io(workdir, e))?;
    }
    let buggy = workdir.join("buggy");
    let fixed = workdir.join("fixed");
    c.materialize(scaffold, false, &buggy)?;
    c.materialize(scaffold, true, &fixed)?;
    let build_b = execute_build_test(&buggy, &scaffold.build_cmd, limits);
    let build_f = execute_build_test(&fixed, &scaffold.build_cmd, limits);
    let blame = match (build_b.success(), build_f.success()) {
        (true, true) => None,
        (false, true) => Some((Part::Buggy, build_b.log())),
        (true, false) => Some((Part::Fixed, build_f.log())),
        // the shared test file is the common factor
        (false, false) => Some((Part::Test, build_f.log())),
    };
    if let Some((part, log)) = blame {
        return Ok(VerifyOutcome::CompileFail {
            part,
            log: tail(&log, LOG_TAIL),
        });
    }
    let run_b = execute_build_test(&buggy, &scaffold.test_cmd, limits);
    if run_b.success() {
        return Ok(VerifyOutcome::TestNotFailingOnBuggy {
            log: tail(&run_b.log(), LOG_TAIL),
        });
    }
    let run_f = execute_build_test(&fixed, &scaffold.test_cmd, limits);
    if !run_f.success() {
        return Ok(VerifyOutcome::TestFailingOnFixed {
            log: tail(&run_f.log(), LOG_TAIL),
        });
    }
    Ok(VerifyOutcome::Ok)
}

/// Regenerates the part blamed by `outcome` with the failure log in the
/// prompt. Past the iteration budget the candidate is rejected instead.
pub fn refine_candidate(
    mut c: SynthCandidate,
    outcome: &VerifyOutcome,
    profile: &SubjectProfile,
    llm: &LlmGateway,
    max_iters: u32,
) -> Result<SynthCandidate> {
    if outcome.is_ok() {
        return Err(Error::InvalidRequest("candidate already verified".into()));
    }
    if c.iteration >= max_iters {
        c.history.push(HistoryEntry {
            iteration: c.iteration,
            outcome: outcome.label().to_string(),
            regenerated: None,
        });
        c.status = CandidateStatus::Rejected;
        c.error = Some(format!("{} after {} refinements", outcome.label(), c.iteration));
        return Ok(c);
    }
    let feedback = format!("\nRefinement attempt {}.\n", c.iteration + 1);
    let (part, req) = match outcome {
        VerifyOutcome::CompileFail { part, log } => {
            let context = [Part::Buggy, Part::Fixed, Part::Test]
                .into_iter()
                .filter(|p| p != part)
                .map(|p| format!("--- {} ---\n{}", p.as_str(), c.part(p)))
                .collect::<Vec<_>>()
                .join("\n");
            let req = CompletionRequest::new("refine.compile")
                .slot("language", profile.name.clone())
                .slot("part", part.as_str())
                .slot("source", c.part(*part))
                .slot("context", context)
                .slot("log", log.clone())
                .slot("feedback", feedback);
            (*part, req)
        }
        VerifyOutcome::TestNotFailingOnBuggy { log } | VerifyOutcome::TestFailingOnFixed { log } => {
            let problem = if matches!(outcome, VerifyOutcome::TestNotFailingOnBuggy { .. }) {
                "it passes on the buggy source"
            } else {
                "it fails on the fixed source"
            };
            let req = CompletionRequest::new("refine.test")
                .slot("language", profile.name.clone())
                .slot("problem", problem)
                .slot("buggy_source", c.buggy_source.clone())
                .slot("fixed_source", c.fixed_source.clone())
                .slot("source", c.test_source.clone())
                .slot("log", log.clone())
                .slot("feedback", feedback);
            (Part::Test, req)
        }
        VerifyOutcome::Ok => unreachable!(),
    };
    let response = llm.complete(&req)?;
    c.history.push(HistoryEntry {
        iteration: c.iteration,
        outcome: outcome.label().to_string(),
        regenerated: Some(part),
    });
    match extract_source(&response) {
        Some(src) => c.set_part(part, src),
        None => log::warn!("refinement of {} returned no source block", c.parent_id),
    }
    c.iteration += 1;
    c.review_flag = true;
    c.status = CandidateStatus::Unverified;
    Ok(c)
}

/// Verify, refine, repeat until verified or rejected.
pub fn settle_candidate(
    mut c: SynthCandidate,
    profile: &SubjectProfile,
    llm: &LlmGateway,
    workdir: &Path,
    limits: &ExecLimits,
    max_iters: u32,
) -> Result<SynthCandidate> {
    let scaffold = profile
        .scaffold
        .as_ref()
        .ok_or_else(|| Error::Config(format!("profile {} has no scaffold", profile.name)))?;
    while c.status == CandidateStatus::Unverified {
        let outcome = verify_candidate(&c, scaffold, workdir, limits)?;
        if outcome.is_ok() {
            c.history.push(HistoryEntry {
                iteration: c.iteration,
                outcome: outcome.label().into(),
                regenerated: None,
            });
            c.status = CandidateStatus::Verified;
        } else {
            c = refine_candidate(c, &outcome, profile, llm, max_iters)?;
        }
    }
    Ok(c)
}
