use std::collections::{BTreeMap, HashSet};
use std::panic::AssertUnwindSafe;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Mutex};
use std::time::Instant;

use super::adapter::{run_sue, SueAdapter, SueTask};
use super::exec::ExecLimits;
use super::ledger::{
    completed_units, read_ledger, validate_run_id, EntryKind, LedgerEntry, LedgerWriter, PlannedUnit, RunPlan,
    RunRecord, Timing, UnitFailure, FAILURES_FILE, LEDGER_FILE, PLAN_FILE,
};
use crate::corpus::{materialize_task_bundle, Benchmark, BugInstance, LayerTag};
use crate::error::{Error, Result};
use crate::fsutil;
use crate::lang::SubjectProfile;
use crate::patch_eval::{judge_patch, PatchVerdict, VariantSolved};

#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub run_id: String,
    /// Parent of `<run_id>/`.
    pub runs_dir: PathBuf,
    pub workers: usize,
    pub limits: ExecLimits,
    /// Stop after this many new units; the run can be resumed later.
    pub max_units: Option<usize>,
}

impl CampaignConfig {
    pub fn new(run_id: &str, runs_dir: &Path) -> Self {
        CampaignConfig {
            run_id: run_id.to_string(),
            runs_dir: runs_dir.to_path_buf(),
            workers: 1,
            limits: ExecLimits::default(),
            max_units: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CampaignSummary {
    pub run_id: String,
    pub run_dir: PathBuf,
    pub planned: usize,
    /// Already in the ledger when this invocation started.
    pub skipped: usize,
    pub executed: usize,
    /// Units still missing afterwards.
    pub remaining: usize,
    pub failures: Vec<UnitFailure>,
}

struct Job<'a> {
    unit: PlannedUnit,
    bug: &'a BugInstance,
}

pub fn plan_run(bench: &Benchmark, layers: &[LayerTag], adapter: &dyn SueAdapter, run_id: &str) -> Result<RunPlan> {
    if layers.is_empty() {
        return Err(Error::Config("no layers requested".into()));
    }
    let mut units = Vec::new();
    let mut seen = HashSet::new();
    for &layer in layers {
        if !seen.insert(layer) {
            continue;
        }
        let found = bench.eval_units(layer);
        if found.is_empty() {
            return Err(Error::Config(format!("layer {layer} has no registered variants")));
        }
        units.extend(found.into_iter().map(|u| PlannedUnit {
            layer,
            group: u.group,
            bug_id: u.parent_id.to_string(),
            variant_id: u.variant_id.to_string(),
        }));
    }
    Ok(RunPlan {
        run_id: run_id.to_string(),
        corpus: bench.name.clone(),
        corpus_digest: bench.digest()?,
        adapter: adapter.id().to_string(),
        attempt_budget: adapter.attempt_budget(),
        layers: seen_order(layers),
        units,
    })
}

fn seen_order(layers: &[LayerTag]) -> Vec<LayerTag> {
    let mut out: Vec<LayerTag> = Vec::new();
    for l in layers {
        if !out.contains(l) {
            out.push(*l);
        }
    }
    out
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn unit_entry(run_id: &str, adapter: &str, unit: &PlannedUnit, kind: EntryKind, timing: Timing) -> LedgerEntry {
    LedgerEntry {
        run_id: run_id.to_string(),
        kind,
        layer: unit.layer,
        group: unit.group.clone(),
        bug_id: unit.bug_id.clone(),
        variant_id: unit.variant_id.clone(),
        adapter: adapter.to_string(),
        attempt: None,
        verdict: None,
        solved: None,
        notes: Vec::new(),
        failure: None,
        timing,
    }
}

/// Bundle, agent, judge: every ledger entry for one unit, in order.
fn run_unit(
    job: &Job<'_>,
    adapter: &dyn SueAdapter,
    profile: &SubjectProfile,
    dir: &Path,
    limits: &ExecLimits,
    run_id: &str,
) -> Vec<LedgerEntry> {
    let start = Instant::now();
    let mut entries = Vec::new();
    let mut notes = Vec::new();
    let mut verdicts: Vec<PatchVerdict> = Vec::new();
    let failure = match materialize_task_bundle(job.bug, &dir.join("bundle"), limits) {
        Err(e) => Some(format!("bundle: {e}")),
        Ok(bundle) => {
            let out = dir.join("out");
            let task = SueTask {
                bundle: &bundle,
                out: &out,
                oracle: job.bug,
            };
            match run_sue(adapter, &task) {
                Err(e) => Some(format!("reading patches: {e}")),
                Ok(sue) => {
                    notes = sue.notes;
                    for (i, patch) in sue.patches.iter().enumerate() {
                        let t = Instant::now();
                        let j = judge_patch(patch, job.bug, profile, &dir.join(format!("judge-{i}")), limits);
                        let mut e = unit_entry(run_id, adapter.id(), &job.unit, EntryKind::Patch, Timing::since(t));
                        e.attempt = Some(patch.attempt);
                        e.verdict = Some(j.verdict.clone());
                        entries.push(e);
                        verdicts.push(j.verdict);
                    }
                    sue.failure
                }
            }
        }
    };
    let refs: Vec<&PatchVerdict> = verdicts.iter().collect();
    let mut done = unit_entry(run_id, adapter.id(), &job.unit, EntryKind::Unit, Timing::since(start));
    done.solved = Some(VariantSolved::from_verdicts(job.bug, &refs));
    done.notes = notes;
    done.failure = failure;
    entries.push(done);
    entries
}

/// Evaluates every planned unit not yet in the ledger. Units are written in
/// plan order whatever order the workers finish in, so an interrupted and
/// resumed run ends with the same ledger as an uninterrupted one.
pub fn run_campaign(
    bench: &Benchmark,
    layers: &[LayerTag],
    adapter: &dyn SueAdapter,
    cfg: &CampaignConfig,
) -> Result<CampaignSummary> {
    validate_run_id(&cfg.run_id)?;
    let plan = plan_run(bench, layers, adapter, &cfg.run_id)?;
    let run_dir = cfg.runs_dir.join(&cfg.run_id);
    let plan_path = run_dir.join(PLAN_FILE);
    if plan_path.is_file() {
        let old: RunPlan = fsutil::read_json(&plan_path)?;
        if old != plan {
            return Err(Error::Config(format!(
                "run {:?} already exists with a different corpus, adapter or layer set",
                cfg.run_id
            )));
        }
    } else {
        fsutil::write_json(&plan_path, &plan)?;
    }
    let ledger_path = run_dir.join(LEDGER_FILE);
    let mut writer = LedgerWriter::open(&ledger_path)?;
    let done = completed_units(&read_ledger(&ledger_path)?);

    let pending: Vec<&PlannedUnit> = plan
        .units
        .iter()
        .filter(|u| !done.contains(&(u.layer, u.variant_id.clone())))
        .collect();
    let skipped = plan.units.len() - pending.len();
    let take = cfg.max_units.unwrap_or(usize::MAX).min(pending.len());
    let mut jobs = Vec::with_capacity(take);
    for u in &pending[..take] {
        let bug = bench
            .instance(&u.variant_id)
            .ok_or_else(|| Error::UnknownParent(u.variant_id.clone()))?;
        jobs.push(Job {
            unit: (*u).clone(),
            bug,
        });
    }

    let work = tempfile::Builder::new()
        .prefix(".work-")
        .tempdir_in(&run_dir)
        .map_err(|e| Error::io(&run_dir, e))?;
    let claimed: Mutex<HashSet<PathBuf>> = Mutex::new(HashSet::new());
    let next = AtomicUsize::new(0);
    let workers = cfg.workers.max(1).min(jobs.len().max(1));
    let (tx, rx) = mpsc::channel::<(usize, Vec<LedgerEntry>)>();

    let written = std::thread::scope(|s| -> Result<usize> {
        for _ in 0..workers {
            let tx = tx.clone();
            let (jobs, next, claimed, work) = (&jobs, &next, &claimed, work.path());
            s.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(job) = jobs.get(i) else { break };
                let dir = work.join(format!("{i:05}-{}", sanitize(&job.unit.variant_id)));
                assert!(
                    claimed.lock().unwrap().insert(dir.clone()),
                    "work directory reused: {}",
                    dir.display()
                );
                let entries = std::panic::catch_unwind(AssertUnwindSafe(|| {
                    run_unit(job, adapter, &bench.profile, &dir, &cfg.limits, &cfg.run_id)
                }))
                .unwrap_or_else(|_| {
                    let mut e = unit_entry(
                        &cfg.run_id,
                        adapter.id(),
                        &job.unit,
                        EntryKind::Unit,
                        Timing::since(Instant::now()),
                    );
                    e.failure = Some("evaluation panicked".into());
                    vec![e]
                });
                let _ = std::fs::remove_dir_all(&dir);
                if tx.send((i, entries)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut buffered: BTreeMap<usize, Vec<LedgerEntry>> = BTreeMap::new();
        let mut next_out = 0;
        for (i, entries) in rx {
            buffered.insert(i, entries);
            while let Some(batch) = buffered.remove(&next_out) {
                writer.append(&batch)?;
                next_out += 1;
            }
        }
        Ok(next_out)
    })?;

    let record = RunRecord {
        dir: run_dir.clone(),
        plan,
        entries: read_ledger(&ledger_path)?,
    };
    let failures = record.failures();
    fsutil::write_json(&run_dir.join(FAILURES_FILE), &failures)?;
    Ok(CampaignSummary {
        run_id: cfg.run_id.clone(),
        run_dir,
        planned: record.plan.units.len(),
        skipped,
        executed: written,
        remaining: record.missing().len(),
        failures,
    })
}
