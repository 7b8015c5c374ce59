use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;
use crate::lang::Scaffold;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateStatus {
    Unverified,
    Verified,
    Rejected,
}

/// Which generated file a problem is blamed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Buggy,
    Fixed,
    Test,
}

impl Part {
    pub fn as_str(&self) -> &'static str {
        match self {
            Part::Buggy => "buggy",
            Part::Fixed => "fixed",
            Part::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum VerifyOutcome {
    Ok,
    CompileFail { part: Part, log: String },
    TestNotFailingOnBuggy { log: String },
    TestFailingOnFixed { log: String },
}

impl VerifyOutcome {
    pub fn is_ok(&self) -> bool {
        matches!(self, VerifyOutcome::Ok)
    }

    pub fn label(&self) -> &'static str {
        match self {
            VerifyOutcome::Ok => "ok",
            VerifyOutcome::CompileFail { .. } => "compile_fail",
            VerifyOutcome::TestNotFailingOnBuggy { .. } => "test_not_failing_on_buggy",
            VerifyOutcome::TestFailingOnFixed { .. } => "test_failing_on_fixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iteration: u32,
    pub outcome: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regenerated: Option<Part>,
}

/// One generated buggy/fixed/test triple and its verification state.
/// Stored as `candidate.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthCandidate {
    pub parent_id: String,
    pub mode: String,
    pub function_name: String,
    pub buggy_source: String,
    pub fixed_source: String,
    pub test_source: String,
    pub iteration: u32,
    pub status: CandidateStatus,
    /// Set once automated refinement touched the candidate.
    pub review_flag: bool,
    #[serde(default)]
    pub history: Vec<HistoryEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SynthCandidate {
    pub fn rejected(parent_id: &str, mode: &str, error: String) -> Self {
        SynthCandidate {
            parent_id: parent_id.to_string(),
            mode: mode.to_string(),
            function_name: String::new(),
            buggy_source: String::new(),
            fixed_source: String::new(),
            test_source: String::new(),
            iteration: 0,
            status: CandidateStatus::Rejected,
            review_flag: false,
            history: Vec::new(),
            error: Some(error),
        }
    }

    pub fn part(&self, part: Part) -> &str {
        match part {
            Part::Buggy => &self.buggy_source,
            Part::Fixed => &self.fixed_source,
            Part::Test => &self.test_source,
        }
    }

    pub fn set_part(&mut self, part: Part, text: String) {
        match part {
            Part::Buggy => self.buggy_source = text,
            Part::Fixed => self.fixed_source = text,
            Part::Test => self.test_source = text,
        }
    }

    /// Writes the scaffold project for the buggy or fixed side into `dir`.
    pub fn materialize(&self, scaffold: &Scaffold, fixed: bool, dir: &Path) -> Result<()> {
        if dir.exists() && !fsutil::is_empty_dir(dir) {
            return Err(Error::WorkdirNotEmpty(dir.to_path_buf()));
        }
        let source = if fixed { &self.fixed_source } else { &self.buggy_source };
        fsutil::write(&dir.join(&scaffold.source_path), source)?;
        fsutil::write(&dir.join(&scaffold.test_path), &self.test_source)
    }
}
