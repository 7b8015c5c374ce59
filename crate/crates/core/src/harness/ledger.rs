use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::LayerTag;
use crate::error::{Error, Result};
use crate::fsutil;
use crate::patch_eval::{PatchVerdict, VariantSolved};
use crate::stats::SolveMatrix;

pub const PLAN_FILE: &str = "plan.json";
pub const LEDGER_FILE: &str = "ledger.jsonl";
pub const FAILURES_FILE: &str = "failures.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryKind {
    /// One judged patch.
    Patch,
    /// Closes a (bug, variant) unit; written after its patches.
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub duration_s: f64,
    pub finished_unix: u64,
}

impl Timing {
    pub fn since(start: std::time::Instant) -> Self {
        let finished_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Timing {
            duration_s: start.elapsed().as_secs_f64(),
            finished_unix,
        }
    }
}

/// One line of `ledger.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub run_id: String,
    pub kind: EntryKind,
    pub layer: LayerTag,
    pub group: String,
    pub bug_id: String,
    pub variant_id: String,
    pub adapter: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempt: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<PatchVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solved: Option<VariantSolved>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub timing: Timing,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlannedUnit {
    pub layer: LayerTag,
    pub group: String,
    pub bug_id: String,
    pub variant_id: String,
}

/// `plan.json`: everything a run will evaluate, fixed when it starts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunPlan {
    pub run_id: String,
    pub corpus: String,
    pub corpus_digest: String,
    pub adapter: String,
    pub attempt_budget: u32,
    pub layers: Vec<LayerTag>,
    pub units: Vec<PlannedUnit>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitFailure {
    pub layer: LayerTag,
    pub bug_id: String,
    pub variant_id: String,
    pub reason: String,
}

pub fn validate_run_id(run_id: &str) -> Result<()> {
    let ok = !run_id.is_empty()
        && !run_id.starts_with('.')
        && run_id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "run id {run_id:?} must be letters, digits, '-', '_' or '.'"
        )))
    }
}

/// Reads a ledger. A final line without a newline is a write cut short and
/// is ignored.
pub fn read_ledger(path: &Path) -> Result<Vec<LedgerEntry>> {
    let text = fsutil::read_to_string(path)?;
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    let mut out = Vec::new();
    for (n, line) in complete.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry = serde_json::from_str(line).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: format!("line {}: {e}", n + 1),
        })?;
        out.push(entry);
    }
    Ok(out)
}

/// Units closed by a `unit` entry, as (layer, variant id).
pub fn completed_units(entries: &[LedgerEntry]) -> BTreeSet<(LayerTag, String)> {
    entries
        .iter()
        .filter(|e| e.kind == EntryKind::Unit)
        .map(|e| (e.layer, e.variant_id.clone()))
        .collect()
}

/// Append-only writer. Each unit's entries go out in a single write.
pub struct LedgerWriter {
    path: PathBuf,
    file: File,
}

impl LedgerWriter {
    /// Opens for appending, first cutting off a torn final line.
    pub fn open(path: &Path) -> Result<Self> {
        let io = |e| Error::io(path, e);
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)
            .map_err(io)?;
        let mut text = Vec::new();
        file.read_to_end(&mut text).map_err(io)?;
        if !text.is_empty() && !text.ends_with(b"\n") {
            let keep = text.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
            log::warn!("{}: dropping a torn final line", path.display());
            file.set_len(keep as u64).map_err(io)?;
            file.seek(SeekFrom::End(0)).map_err(io)?;
        }
        Ok(LedgerWriter {
            path: path.to_path_buf(),
            file,
        })
    }

    pub fn append(&mut self, entries: &[LedgerEntry]) -> Result<()> {
        let mut buf = String::new();
        for e in entries {
            buf.push_str(&serde_json::to_string(e).expect("ledger entry serializes"));
            buf.push('\n');
        }
        self.file
            .write_all(buf.as_bytes())
            .map_err(|e| Error::io(&self.path, e))?;
        self.file.sync_data().map_err(|e| Error::io(&self.path, e))
    }
}

/// A finished or partial run as stored on disk.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub dir: PathBuf,
    pub plan: RunPlan,
    pub entries: Vec<LedgerEntry>,
}

pub fn load_run(runs_dir: &Path, run_id: &str) -> Result<RunRecord> {
    validate_run_id(run_id).map_err(|_| Error::RunNotFound(run_id.to_string()))?;
    let dir = runs_dir.join(run_id);
    let plan_path = dir.join(PLAN_FILE);
    if !plan_path.is_file() {
        return Err(Error::RunNotFound(run_id.to_string()));
    }
    let plan = fsutil::read_json(&plan_path)?;
    let ledger = dir.join(LEDGER_FILE);
    let entries = if ledger.is_file() {
        read_ledger(&ledger)?
    } else {
        Vec::new()
    };
    Ok(RunRecord { dir, plan, entries })
}

impl RunRecord {
    pub fn missing(&self) -> Vec<(String, String)> {
        let done = completed_units(&self.entries);
        self.plan
            .units
            .iter()
            .filter(|u| !done.contains(&(u.layer, u.variant_id.clone())))
            .map(|u| (u.bug_id.clone(), u.variant_id.clone()))
            .collect()
    }

    pub fn failures(&self) -> Vec<UnitFailure> {
        self.entries
            .iter()
            .filter(|e| e.kind == EntryKind::Unit)
            .filter_map(|e| {
                e.failure.as_ref().map(|f| UnitFailure {
                    layer: e.layer,
                    bug_id: e.bug_id.clone(),
                    variant_id: e.variant_id.clone(),
                    reason: f.clone(),
                })
            })
            .collect()
    }

    /// One solve matrix per (layer, group), built from `unit` entries only.
    pub fn matrices(&self) -> Result<Vec<SolveMatrix>> {
        let missing = self.missing();
        if !missing.is_empty() {
            return Err(Error::IncompleteLedger(missing));
        }
        let mut solved: BTreeMap<(LayerTag, &str), &VariantSolved> = BTreeMap::new();
        for e in self.entries.iter().filter(|e| e.kind == EntryKind::Unit) {
            if let Some(s) = &e.solved {
                solved.entry((e.layer, e.variant_id.as_str())).or_insert(s);
            }
        }
        let mut out: BTreeMap<(LayerTag, String), SolveMatrix> = BTreeMap::new();
        for u in &self.plan.units {
            let m = out
                .entry((u.layer, u.group.clone()))
                .or_insert_with(|| SolveMatrix::new(self.plan.adapter.clone(), u.layer, u.group.clone()));
            m.expect(&u.bug_id, 1);
            let s = solved.get(&(u.layer, u.variant_id.as_str()));
            let (pp, sye, em) = s.map_or((false, false, false), |s| (s.solved_pp, s.solved_sye, s.solved_em));
            m.record(&u.bug_id, &u.variant_id, pp, sye, em);
        }
        Ok(out.into_values().collect())
    }
}
