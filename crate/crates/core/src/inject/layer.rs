use serde::{Deserialize, Serialize};

use super::ingest::{CloneCandidate, IngestReport};
use super::inject::{generate_tests, inject_bug, InjectedVariant};
use super::verify::verify_refine;
use crate::corpus::{
    instance_from_record, variant_id, Benchmark, BugInstance, LayerTag, Provenance, TransformDescriptor,
    TransformScheme, Variant, VariantRecord, VariantSet,
};
use crate::error::{Error, Result};
use crate::fsutil;
use crate::harness::{parallel_map, ExecLimits};
use crate::lang::SubjectProfile;
use crate::llm::LlmGateway;
use crate::synth::{failing_output, CandidateStatus, DEFAULT_MAX_REFINE_ITERS};

#[derive(Debug, Clone, Copy)]
pub struct AnalyzeOptions {
    pub max_refine_iters: u32,
    pub limits: ExecLimits,
    pub jobs: usize,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            max_refine_iters: DEFAULT_MAX_REFINE_ITERS,
            limits: ExecLimits::default(),
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateOutcome {
    pub candidate: String,
    pub status: CandidateStatus,
    pub refine_iterations: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParentCoverage {
    pub bug_id: String,
    pub candidates: usize,
    pub verified: usize,
    pub rejected: usize,
    pub outcomes: Vec<CandidateOutcome>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub group: String,
    pub parents: Vec<ParentCoverage>,
    /// (parent id, record, reason) from ingestion.
    pub dropped: Vec<(String, String, String)>,
}

impl AnalyzeReport {
    pub fn uncovered(&self) -> Vec<&str> {
        self.parents
            .iter()
            .filter(|p| p.verified == 0)
            .map(|p| p.bug_id.as_str())
            .collect()
    }

    /// Every ingested candidate ended verified or rejected.
    pub fn reconciles(&self) -> bool {
        self.parents
            .iter()
            .all(|p| p.verified + p.rejected == p.candidates && p.outcomes.len() == p.candidates)
    }
}

struct Job<'a> {
    parent: &'a BugInstance,
    candidate: &'a CloneCandidate,
    failure: &'a str,
}

fn run_candidate(
    job: &Job<'_>,
    profile: &SubjectProfile,
    llm: &LlmGateway,
    opts: &AnalyzeOptions,
    work: &std::path::Path,
) -> Result<InjectedVariant> {
    let v = inject_bug(job.candidate, job.parent, profile, llm)?;
    let v = generate_tests(v, job.failure, profile, llm)?;
    if v.status != CandidateStatus::Unverified {
        return Ok(v);
    }
    let v = verify_refine(
        v,
        profile,
        llm,
        &work.join("verify"),
        &opts.limits,
        opts.max_refine_iters,
    )?;
    if v.status == CandidateStatus::Verified {
        v.materialize(false, &work.join("variant/buggy"))?;
        v.materialize(true, &work.join("variant/fixed"))?;
    }
    Ok(v)
}

fn variant_for(
    parent: &BugInstance,
    v: &InjectedVariant,
    slot: u32,
    dir: &std::path::Path,
    profile: &SubjectProfile,
) -> Result<Variant> {
    let c = &v.clone_origin;
    let record = VariantRecord {
        id: variant_id(&parent.id, LayerTag::Analyze, slot),
        parent_id: parent.id.clone(),
        project: c.repo.clone(),
        buggy_file: c.path.clone(),
        function_name: c.function_name.clone(),
        function_occurrence: None,
        build_cmd: c.build_cmd.clone(),
        test_cmd: c.test_cmd.clone(),
        trigger_test_cmd: c.trigger_test_cmd.clone(),
        trigger_tests: vec![v.test_name.clone()],
        layer: LayerTag::Analyze,
        provenance: Provenance::Injected,
    };
    let bug = instance_from_record(record, dir.join("buggy"), dir.join("fixed"), profile)?;
    let mut transform = TransformDescriptor::new(TransformScheme::CloneInjection);
    transform.notes = format!("clone of {}; refinements: {}", c.describe(), v.refine_iterations);
    Ok(Variant { slot, bug, transform })
}

/// Injects, tests and verifies every ingested candidate, then registers the
/// verified ones (at most five per parent).
pub fn build_analyze_layer(
    bench: &mut Benchmark,
    ingest: &IngestReport,
    llm: &LlmGateway,
    opts: &AnalyzeOptions,
) -> Result<AnalyzeReport> {
    let profile = bench.profile.clone();
    let parents = bench.bugs.clone();
    let with_candidates: Vec<&BugInstance> = parents
        .iter()
        .filter(|b| !ingest.for_parent(&b.id).is_empty())
        .collect();
    let failures: Vec<String> = parallel_map(&with_candidates, opts.jobs, |b| {
        failing_output(b, &opts.limits).unwrap_or_else(|e| format!("(failing output unavailable: {e})"))
    });
    let mut jobs = Vec::new();
    for (parent, failure) in with_candidates.iter().zip(&failures) {
        for candidate in ingest.for_parent(&parent.id) {
            jobs.push(Job {
                parent,
                candidate,
                failure,
            });
        }
    }
    let results = parallel_map(&jobs, opts.jobs, |job| {
        let work = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
        let v = run_candidate(job, &profile, llm, opts, work.path())?;
        Ok::<_, Error>((work, v))
    });

    let group = TransformDescriptor::new(TransformScheme::CloneInjection).group();
    let mut report = AnalyzeReport {
        group: group.clone(),
        parents: Vec::new(),
        dropped: ingest.dropped.clone(),
    };
    let mut results = jobs.iter().zip(results).peekable();
    for parent in &parents {
        let mut cov = ParentCoverage {
            bug_id: parent.id.clone(),
            ..Default::default()
        };
        let mut variants = Vec::new();
        let mut keep = Vec::new();
        let cand_dir = bench.root.join("candidates").join(&group).join(&parent.id);
        if cand_dir.exists() {
            std::fs::remove_dir_all(&cand_dir).map_err(|e| Error::io(&cand_dir, e))?;
        }
        while let Some((job, r)) = results.next_if(|(j, _)| j.parent.id == parent.id) {
            cov.candidates += 1;
            let mut outcome = CandidateOutcome {
                candidate: job.candidate.describe(),
                status: CandidateStatus::Rejected,
                refine_iterations: 0,
                variant_id: None,
                reason: None,
            };
            match r {
                Ok((work, v)) => {
                    fsutil::write_json(&cand_dir.join(cov.candidates.to_string()).join("injected.json"), &v)?;
                    outcome.status = v.status;
                    outcome.refine_iterations = v.refine_iterations;
                    outcome.reason = v.error.clone();
                    if v.status == CandidateStatus::Verified && variants.len() < 5 {
                        let slot = variants.len() as u32 + 1;
                        match variant_for(parent, &v, slot, &work.path().join("variant"), &profile) {
                            Ok(var) => {
                                outcome.variant_id = Some(var.bug.id.clone());
                                variants.push(var);
                                keep.push((work, v));
                            }
                            Err(e) => {
                                outcome.status = CandidateStatus::Rejected;
                                outcome.reason = Some(e.to_string());
                            }
                        }
                    }
                }
                Err(e) => outcome.reason = Some(e.to_string()),
            }
            cov.outcomes.push(outcome);
        }
        if !variants.is_empty() {
            let slots: Vec<u32> = variants.iter().map(|v| v.slot).collect();
            let set = VariantSet {
                parent_id: parent.id.clone(),
                layer: LayerTag::Analyze,
                variants,
            };
            if let Err(e) = bench.register_variant_set(set) {
                for o in cov.outcomes.iter_mut().filter(|o| o.variant_id.is_some()) {
                    o.status = CandidateStatus::Rejected;
                    o.variant_id = None;
                    o.reason = Some(e.to_string());
                }
            } else {
                let dir = bench.root.join("variants").join("analyze").join(&parent.id);
                for (slot, (_, v)) in slots.iter().zip(&keep) {
                    fsutil::write_json(&dir.join(slot.to_string()).join("injected.json"), v)?;
                }
            }
        }
        cov.verified = cov
            .outcomes
            .iter()
            .filter(|o| o.status == CandidateStatus::Verified)
            .count();
        cov.rejected = cov.candidates - cov.verified;
        report.parents.push(cov);
    }
    Ok(report)
}
