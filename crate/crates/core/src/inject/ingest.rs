use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;
use crate::lang::{locate_function, SubjectProfile};

/// Candidates kept per parent bug.
pub const MAX_PER_PARENT: usize = 5;

/// One line of a search export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchRecord {
    pub parent_id: String,
    pub repo: String,
    pub path: PathBuf,
    pub function: String,
    #[serde(default)]
    pub snippet: String,
    /// Host build and test commands; the profile scaffold's are used when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub build_cmd: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_cmd: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger_test_cmd: Option<String>,
    /// Existing test directory of the host, relative to its root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_dir: Option<PathBuf>,
}

/// A search hit confirmed to exist in a mirrored repository.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CloneCandidate {
    pub parent_id: String,
    pub repo: String,
    pub path: PathBuf,
    pub function_name: String,
    pub snippet: String,
    pub exists_verified: bool,
    /// Mirror checkout of the host project.
    pub host_root: PathBuf,
    pub build_cmd: String,
    pub test_cmd: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger_test_cmd: Option<String>,
    /// `None` when the host has no tests of its own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_dir: Option<PathBuf>,
}

impl CloneCandidate {
    pub fn describe(&self) -> String {
        format!("{}:{}#{}", self.repo, self.path.display(), self.function_name)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub candidates: BTreeMap<String, Vec<CloneCandidate>>,
    /// (parent id, record, reason)
    pub dropped: Vec<(String, String, String)>,
}

impl IngestReport {
    pub fn for_parent(&self, id: &str) -> &[CloneCandidate] {
        self.candidates.get(id).map(Vec::as_slice).unwrap_or(&[])
    }
}

pub fn read_search_export(path: &Path) -> Result<Vec<SearchRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: format!("line {}: {e}", n + 1),
        })?);
    }
    Ok(out)
}

fn plain_relative(p: &Path) -> bool {
    !p.as_os_str().is_empty() && p.components().all(|c| matches!(c, Component::Normal(_)))
}

fn check(
    record: &SearchRecord,
    workspace: &Path,
    profile: &SubjectProfile,
) -> std::result::Result<CloneCandidate, String> {
    let repo = Path::new(&record.repo);
    if !plain_relative(repo) || !plain_relative(&record.path) {
        return Err("repo or path leaves the workspace".into());
    }
    let host_root = workspace.join("mirrors").join(repo);
    if !host_root.is_dir() {
        return Err("repository is not mirrored".into());
    }
    let file = host_root.join(&record.path);
    let text = fsutil::read_to_string(&file).map_err(|_| "file does not exist".to_string())?;
    locate_function(&text, profile, &record.function).map_err(|e| format!("function not found: {e}"))?;
    let scaffold = profile.scaffold.as_ref();
    let pick = |own: &Option<String>, fallback: Option<&String>| {
        own.clone()
            .or_else(|| fallback.cloned())
            .ok_or_else(|| "no build or test command".to_string())
    };
    Ok(CloneCandidate {
        parent_id: record.parent_id.clone(),
        repo: record.repo.clone(),
        path: record.path.clone(),
        function_name: record.function.clone(),
        snippet: record.snippet.clone(),
        exists_verified: true,
        build_cmd: pick(&record.build_cmd, scaffold.map(|s| &s.build_cmd))?,
        test_cmd: pick(&record.test_cmd, scaffold.map(|s| &s.test_cmd))?,
        trigger_test_cmd: record
            .trigger_test_cmd
            .clone()
            .or_else(|| scaffold.and_then(|s| s.trigger_test_cmd.clone())),
        test_dir: record.test_dir.clone().filter(|d| host_root.join(d).is_dir()),
        host_root,
    })
}

/// Keeps records whose repository, file and function exist under
/// `workspace/mirrors/`, at most [`MAX_PER_PARENT`] per parent in
/// (repo, path) order.
pub fn ingest_clone_candidates(records: &[SearchRecord], workspace: &Path, profile: &SubjectProfile) -> IngestReport {
    let mut report = IngestReport::default();
    let mut by_parent: BTreeMap<String, Vec<CloneCandidate>> = BTreeMap::new();
    for r in records {
        match check(r, workspace, profile) {
            Ok(c) => by_parent.entry(r.parent_id.clone()).or_default().push(c),
            Err(reason) => {
                let what = format!("{}:{}#{}", r.repo, r.path.display(), r.function);
                log::info!("dropping search hit {what}: {reason}");
                report.dropped.push((r.parent_id.clone(), what, reason));
            }
        }
    }
    for (parent, mut list) in by_parent {
        list.sort_by(|a, b| (&a.repo, &a.path, &a.function_name).cmp(&(&b.repo, &b.path, &b.function_name)));
        list.dedup_by(|a, b| (&a.repo, &a.path, &a.function_name) == (&b.repo, &b.path, &b.function_name));
        for extra in list.split_off(list.len().min(MAX_PER_PARENT)) {
            report
                .dropped
                .push((parent.clone(), extra.describe(), "over the per-parent limit".into()));
        }
        report.candidates.insert(parent, list);
    }
    report
}
