use std::path::Path;

use serde::{Deserialize, Serialize};

use super::candidate::{CandidateStatus, SynthCandidate};
use super::generate::{synthesize_variants, SynthContext, SynthMode};
use super::verify::{settle_candidate, DEFAULT_MAX_REFINE_ITERS, LOG_TAIL};
use crate::corpus::{
    checkout, instance_from_record, run_checkout, variant_id, Benchmark, BugInstance, LayerTag, Provenance,
    TransformDescriptor, Variant, VariantRecord, VariantSet,
};
use crate::error::{Error, Result};
use crate::fsutil;
use crate::harness::{parallel_map, tail, ExecLimits};
use crate::lang::SubjectProfile;
use crate::llm::LlmGateway;

#[derive(Debug, Clone, Copy)]
pub struct UnderstandOptions {
    pub count: usize,
    pub max_refine_iters: u32,
    pub limits: ExecLimits,
    pub jobs: usize,
}

impl Default for UnderstandOptions {
    fn default() -> Self {
        UnderstandOptions {
            count: 5,
            max_refine_iters: DEFAULT_MAX_REFINE_ITERS,
            limits: ExecLimits::default(),
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugYield {
    pub bug_id: String,
    pub requested: usize,
    pub verified: usize,
    pub rejected: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl BugYield {
    pub fn covered(&self) -> bool {
        self.verified > 0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnderstandReport {
    pub mode: String,
    pub group: String,
    pub bugs: Vec<BugYield>,
}

impl UnderstandReport {
    pub fn uncovered(&self) -> Vec<&str> {
        self.bugs
            .iter()
            .filter(|b| !b.covered())
            .map(|b| b.bug_id.as_str())
            .collect()
    }
}

/// Trigger-test output of the buggy version, for prompts.
pub fn failing_output(bug: &BugInstance, limits: &ExecLimits) -> Result<String> {
    let tmp = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
    let dir = tmp.path().join("buggy");
    checkout(bug, false, &dir)?;
    let run = run_checkout(bug, &dir, limits, true);
    let failing: Vec<String> = run
        .triggers
        .iter()
        .filter(|(_, r)| !r.success())
        .map(|(name, r)| format!("{name}:\n{}", r.log()))
        .collect();
    let text = if failing.is_empty() {
        run.log()
    } else {
        failing.join("\n")
    };
    Ok(tail(&text, LOG_TAIL))
}

struct BugWork {
    candidates: Vec<SynthCandidate>,
    variants: Vec<(Variant, SynthCandidate)>,
}

fn variant_from(
    parent: &BugInstance,
    c: &SynthCandidate,
    slot: u32,
    scheme: &dyn SynthMode,
    profile: &SubjectProfile,
    dir: &Path,
) -> Result<Variant> {
    let scaffold = profile
        .scaffold
        .as_ref()
        .ok_or_else(|| Error::Config("no scaffold".into()))?;
    c.materialize(scaffold, false, &dir.join("buggy"))?;
    c.materialize(scaffold, true, &dir.join("fixed"))?;
    let record = VariantRecord {
        id: variant_id(&parent.id, LayerTag::Understand, slot),
        parent_id: parent.id.clone(),
        project: parent.project.clone(),
        buggy_file: scaffold.source_path.clone(),
        function_name: c.function_name.clone(),
        function_occurrence: None,
        build_cmd: scaffold.build_cmd.clone(),
        test_cmd: scaffold.test_cmd.clone(),
        trigger_test_cmd: scaffold.trigger_test_cmd.clone(),
        trigger_tests: scaffold.trigger_tests.clone(),
        layer: LayerTag::Understand,
        provenance: Provenance::Synthetic,
    };
    let bug = instance_from_record(record, dir.join("buggy"), dir.join("fixed"), profile)?;
    let mut transform = TransformDescriptor::new(scheme.scheme());
    transform.notes = format!(
        "refinements: {}; review: {}",
        c.iteration,
        if c.review_flag { "flagged" } else { "none" }
    );
    Ok(Variant { slot, bug, transform })
}

fn work_on_bug(
    bug: &BugInstance,
    profile: &SubjectProfile,
    mode: &dyn SynthMode,
    llm: &LlmGateway,
    opts: &UnderstandOptions,
    work: &Path,
) -> Result<BugWork> {
    let ctx = SynthContext {
        failing_output: failing_output(bug, &opts.limits)?,
    };
    let drafted = synthesize_variants(bug, profile, mode, opts.count, &ctx, llm)?;
    let mut candidates = Vec::with_capacity(drafted.len());
    for (k, c) in drafted.into_iter().enumerate() {
        let settled = if c.status == CandidateStatus::Unverified {
            settle_candidate(
                c,
                profile,
                llm,
                &work.join(format!("verify-{k}")),
                &opts.limits,
                opts.max_refine_iters,
            )?
        } else {
            c
        };
        candidates.push(settled);
    }
    let base = TransformDescriptor::new(mode.scheme()).slot_base();
    let mut variants = Vec::new();
    for c in candidates
        .iter()
        .filter(|c| c.status == CandidateStatus::Verified)
        .take(5)
    {
        let slot = base + variants.len() as u32;
        let v = variant_from(bug, c, slot, mode, profile, &work.join(format!("variant-{slot}")))?;
        variants.push((v, c.clone()));
    }
    Ok(BugWork { candidates, variants })
}

/// Generates, verifies and registers up to five synthetic variants per
/// original bug. Bugs without a verified candidate stay uncovered.
pub fn build_understand_layer(
    bench: &mut Benchmark,
    mode: &dyn SynthMode,
    llm: &LlmGateway,
    opts: &UnderstandOptions,
) -> Result<UnderstandReport> {
    if bench.profile.scaffold.is_none() {
        return Err(Error::Config(format!("profile {} has no scaffold", bench.profile.name)));
    }
    let profile = bench.profile.clone();
    let bugs = bench.bugs.clone();
    let results = parallel_map(&bugs, opts.jobs, |bug| {
        let work = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
        let r = work_on_bug(bug, &profile, mode, llm, opts, work.path())?;
        Ok((work, r))
    });

    let group = TransformDescriptor::new(mode.scheme()).group();
    let mut report = UnderstandReport {
        mode: mode.name().to_string(),
        group: group.clone(),
        bugs: Vec::new(),
    };
    for (bug, r) in bugs.iter().zip(results) {
        let mut row = BugYield {
            bug_id: bug.id.clone(),
            requested: opts.count,
            ..Default::default()
        };
        let r: Result<(tempfile::TempDir, BugWork)> = r;
        // the scratch directory must outlive registration
        let (_scratch, work) = match r {
            Ok(pair) => pair,
            Err(e) => {
                row.error = Some(e.to_string());
                row.rejected = opts.count;
                report.bugs.push(row);
                continue;
            }
        };
        let cand_dir = bench.root.join("candidates").join(&group).join(&bug.id);
        if cand_dir.exists() {
            std::fs::remove_dir_all(&cand_dir).map_err(|e| Error::io(&cand_dir, e))?;
        }
        for (k, c) in work.candidates.iter().enumerate() {
            fsutil::write_json(&cand_dir.join((k + 1).to_string()).join("candidate.json"), c)?;
        }
        row.rejected = work
            .candidates
            .iter()
            .filter(|c| c.status == CandidateStatus::Rejected)
            .count();
        if !work.variants.is_empty() {
            let (variants, accepted): (Vec<Variant>, Vec<SynthCandidate>) = work.variants.into_iter().unzip();
            let slots: Vec<u32> = variants.iter().map(|v| v.slot).collect();
            let set = VariantSet {
                parent_id: bug.id.clone(),
                layer: LayerTag::Understand,
                variants,
            };
            match bench.register_variant_set(set) {
                Ok(()) => {
                    let parent_dir = bench.root.join("variants").join("understand").join(&bug.id);
                    for (slot, c) in slots.iter().zip(&accepted) {
                        fsutil::write_json(&parent_dir.join(slot.to_string()).join("candidate.json"), c)?;
                    }
                    row.verified = accepted.len();
                }
                Err(e) => row.error = Some(e.to_string()),
            }
        }
        report.bugs.push(row);
    }
    Ok(report)
}
