use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::model::{BugInstance, LayerTag};
use super::store::checkout;
use crate::error::{Error, Result};
use crate::fsutil;
use crate::harness::{execute_build_test, ExecLimits, ExecResult};
use crate::lang::Span;

/// `metadata.json` inside a task bundle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleMetadata {
    pub id: String,
    pub parent_id: String,
    pub layer: LayerTag,
    pub project: String,
    pub build_cmd: String,
    pub test_cmd: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger_test_cmd: Option<String>,
    pub trigger_tests: Vec<String>,
    pub buggy_file: PathBuf,
    pub function_name: String,
    pub function_span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskBundle {
    pub dir: PathBuf,
    pub project: PathBuf,
    pub metadata: BundleMetadata,
}

/// Outcome of running one checkout's build and tests.
#[derive(Debug, Clone)]
pub struct CheckoutRun {
    pub build: ExecResult,
    pub tests: Option<ExecResult>,
    pub triggers: Vec<(String, ExecResult)>,
}

impl CheckoutRun {
    pub fn compiled(&self) -> bool {
        self.build.success()
    }

    pub fn suite_passed(&self) -> bool {
        self.compiled() && self.tests.as_ref().is_some_and(|t| t.success())
    }

    /// At least one trigger test fails (the full suite stands in when the
    /// bug has no per-test command).
    pub fn trigger_failed(&self) -> bool {
        if !self.compiled() {
            return false;
        }
        if self.triggers.is_empty() {
            return self.tests.as_ref().is_some_and(|t| !t.success());
        }
        self.triggers.iter().any(|(_, r)| !r.success())
    }

    pub fn log(&self) -> String {
        let mut out = format!("$ build\n{}", self.build.log());
        if let Some(t) = &self.tests {
            out.push_str(&format!("\n$ test\n{}", t.log()));
        }
        for (name, r) in &self.triggers {
            out.push_str(&format!("\n$ test {name}\n{}", r.log()));
        }
        out
    }
}

/// Builds `dir` and runs the suite, plus each trigger test when requested.
pub fn run_checkout(bug: &BugInstance, dir: &Path, limits: &ExecLimits, triggers: bool) -> CheckoutRun {
    let build = execute_build_test(dir, &bug.build_cmd, limits);
    if !build.success() {
        return CheckoutRun {
            build,
            tests: None,
            triggers: Vec::new(),
        };
    }
    let tests = execute_build_test(dir, &bug.test_cmd, limits);
    let mut trigger_runs = Vec::new();
    if triggers {
        for t in &bug.trigger_tests {
            if let Some(cmd) = bug.trigger_command(t) {
                trigger_runs.push((t.clone(), execute_build_test(dir, &cmd, limits)));
            }
        }
    }
    CheckoutRun {
        build,
        tests: Some(tests),
        triggers: trigger_runs,
    }
}

/// Writes the package handed to a repair agent: a full buggy checkout,
/// `metadata.json` and the failing test output.
pub fn materialize_task_bundle(bug: &BugInstance, workdir: &Path, limits: &ExecLimits) -> Result<TaskBundle> {
    if workdir.exists() && !fsutil::is_empty_dir(workdir) {
        return Err(Error::WorkdirNotEmpty(workdir.to_path_buf()));
    }
    let project = workdir.join("project");
    checkout(bug, false, &project)?;
    let run = run_checkout(bug, &project, limits, true);
    if !run.compiled() {
        return Err(Error::InvalidCorpusEntry {
            id: bug.id.clone(),
            reason: format!("buggy version does not build:\n{}", run.build.log()),
        });
    }
    if !run.trigger_failed() {
        return Err(Error::InvalidCorpusEntry {
            id: bug.id.clone(),
            reason: "trigger tests pass on the buggy version".into(),
        });
    }
    let mut failing = run.tests.as_ref().map(|t| t.log()).unwrap_or_default();
    for (name, r) in run.triggers.iter().filter(|(_, r)| !r.success()) {
        failing.push_str(&format!("\n--- {name}\n{}", r.log()));
    }
    fsutil::write(&workdir.join("failing_output.txt"), failing)?;
    let metadata = BundleMetadata {
        id: bug.id.clone(),
        parent_id: bug.parent_id.clone(),
        layer: bug.layer,
        project: bug.project.clone(),
        build_cmd: bug.build_cmd.clone(),
        test_cmd: bug.test_cmd.clone(),
        trigger_test_cmd: bug.trigger_test_cmd.clone(),
        trigger_tests: bug.trigger_tests.clone(),
        buggy_file: bug.buggy_function.file.clone(),
        function_name: bug.function_name.clone(),
        function_span: bug.buggy_function.span,
    };
    fsutil::write_json(&workdir.join("metadata.json"), &metadata)?;
    Ok(TaskBundle {
        dir: workdir.to_path_buf(),
        project,
        metadata,
    })
}
