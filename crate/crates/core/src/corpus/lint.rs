use super::bundle::run_checkout;
use super::model::BugInstance;
use super::store::{checkout, Benchmark};
use crate::error::{Error, Result};
use crate::harness::{parallel_map, ExecLimits};
use crate::lang::SubjectProfile;
use crate::patch_eval::{judge_pp, Patch};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LintReport {
    pub checked: Vec<String>,
    /// (instance id, reason)
    pub failures: Vec<(String, String)>,
}

impl LintReport {
    pub fn into_result(self) -> Result<Self> {
        if self.failures.is_empty() {
            Ok(self)
        } else {
            Err(Error::LintFailed(self.failures.into_iter().map(|(id, _)| id).collect()))
        }
    }
}

/// The fixed version must pass its whole suite and the buggy version must
/// fail a trigger test. Then, judged as patches on the buggy checkout, the
/// oracle function must be plausible and the buggy function must not.
pub fn lint_instance(bug: &BugInstance, profile: &SubjectProfile, limits: &ExecLimits) -> Result<Option<String>> {
    let tmp = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
    let fixed = tmp.path().join("fixed");
    checkout(bug, true, &fixed)?;
    let run = run_checkout(bug, &fixed, limits, true);
    if !run.suite_passed() || run.triggers.iter().any(|(_, r)| !r.success()) {
        return Ok(Some(format!("fixed version fails:\n{}", run.log())));
    }
    let buggy = tmp.path().join("buggy");
    checkout(bug, false, &buggy)?;
    let run = run_checkout(bug, &buggy, limits, true);
    if !run.compiled() {
        return Ok(Some(format!("buggy version does not build:\n{}", run.build.log())));
    }
    if !run.trigger_failed() {
        return Ok(Some("buggy version passes its trigger tests".into()));
    }
    let as_patch = |text: &str| Patch {
        bug_id: bug.parent_id.clone(),
        variant_id: bug.id.clone(),
        producer: "lint".into(),
        attempt: 1,
        file: bug.buggy_function.file.clone(),
        function_name: bug.function_name.clone(),
        replacement: text.to_string(),
    };
    let oracle = judge_pp(
        &as_patch(&bug.fixed_function.text),
        bug,
        profile,
        &tmp.path().join("oracle"),
        limits,
    )?;
    if !oracle.passed {
        return Ok(Some(format!("oracle fix is not plausible:\n{}", oracle.log)));
    }
    let unfixed = judge_pp(
        &as_patch(&bug.buggy_function.text),
        bug,
        profile,
        &tmp.path().join("unfixed"),
        limits,
    )?;
    if unfixed.passed {
        return Ok(Some("buggy function passes the full suite".into()));
    }
    Ok(None)
}

/// Lints every original and variant, `jobs` at a time.
pub fn lint_benchmark(bench: &Benchmark, limits: &ExecLimits, jobs: usize) -> Result<LintReport> {
    let mut instances: Vec<&BugInstance> = bench.bugs.iter().collect();
    for set in &bench.variant_sets {
        instances.extend(set.variants.iter().map(|v| &v.bug));
    }
    let results = parallel_map(&instances, jobs, |bug| lint_instance(bug, &bench.profile, limits));
    let mut report = LintReport::default();
    for (bug, r) in instances.iter().zip(results) {
        report.checked.push(bug.id.clone());
        if let Some(reason) = r? {
            report.failures.push((bug.id.clone(), reason));
        }
    }
    Ok(report)
}
