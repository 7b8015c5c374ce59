use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::comments::perturb_region;
use super::plan::{hash_plan_for_names, project_identifiers, rephrase_plan_for_names, RenamePlan};
use super::rename::{apply_rename, verify_renamed};
use crate::corpus::{
    checkout, instance_from_record, variant_id, Benchmark, BugInstance, CommentMode, LayerTag, Provenance,
    RenameTargets, TransformDescriptor, TransformScheme, Variant, VariantRecord, VariantSet,
};
use crate::error::{Error, Result};
use crate::fsutil;
use crate::harness::parallel_map;
use crate::lang::{index_call_sites, locate_function_nth, resolve_function_scope, CallSiteIndex, SubjectProfile};
use crate::llm::LlmGateway;

#[derive(Clone, Copy)]
pub struct ApplyOptions<'a> {
    pub targets: RenameTargets,
    pub clock_stamp: u64,
    pub comment_mode: CommentMode,
    pub llm: Option<&'a LlmGateway>,
    pub jobs: usize,
}

impl Default for ApplyOptions<'_> {
    fn default() -> Self {
        ApplyOptions {
            targets: RenameTargets::Vars,
            clock_stamp: 0,
            comment_mode: CommentMode::AddTextual,
            llm: None,
            jobs: 1,
        }
    }
}

#[derive(Debug)]
pub enum ApplyOutcome {
    Variant(Box<Variant>),
    Excluded(String),
}

/// One Apply-layer transformation, selected by name.
pub trait ApplyScheme: Send + Sync {
    fn name(&self) -> &'static str;

    /// Rejects options the scheme cannot run with.
    fn check(&self, opts: &ApplyOptions<'_>) -> Result<()>;

    /// Builds the variant of `bug` inside `work`, which outlives the call.
    fn transform(
        &self,
        bug: &BugInstance,
        profile: &SubjectProfile,
        opts: &ApplyOptions<'_>,
        work: &Path,
    ) -> Result<ApplyOutcome>;
}

pub struct ApplySchemes {
    schemes: BTreeMap<String, Box<dyn ApplyScheme>>,
}

impl Default for ApplySchemes {
    fn default() -> Self {
        let mut r = ApplySchemes {
            schemes: BTreeMap::new(),
        };
        r.register(Box::new(RenameScheme::Hash));
        r.register(Box::new(RenameScheme::Rephrase));
        r.register(Box::new(CommentScheme));
        r
    }
}

impl ApplySchemes {
    pub fn register(&mut self, scheme: Box<dyn ApplyScheme>) {
        self.schemes.insert(scheme.name().to_string(), scheme);
    }

    pub fn names(&self) -> Vec<&str> {
        self.schemes.keys().map(String::as_str).collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn ApplyScheme> {
        self.schemes
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "apply scheme",
                name: name.to_string(),
            })
    }
}

/// Hash or model-proposed renaming.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenameScheme {
    Hash,
    Rephrase,
}

struct Tree {
    src: PathBuf,
    out: PathBuf,
}

fn variant_for(
    bug: &BugInstance,
    transform: TransformDescriptor,
    function_name: String,
    buggy: PathBuf,
    fixed: PathBuf,
    profile: &SubjectProfile,
) -> Result<ApplyOutcome> {
    let slot = transform.slot_base();
    let mut record = VariantRecord::describe(bug, &variant_id(&bug.id, LayerTag::Apply, slot), LayerTag::Apply);
    record.function_name = function_name;
    record.provenance = Provenance::Perturbed;
    let instance = instance_from_record(record, buggy, fixed, profile)?;
    Ok(ApplyOutcome::Variant(Box::new(Variant {
        slot,
        bug: instance,
        transform,
    })))
}

impl ApplyScheme for RenameScheme {
    fn name(&self) -> &'static str {
        match self {
            RenameScheme::Hash => "hash",
            RenameScheme::Rephrase => "rephrase",
        }
    }

    fn check(&self, opts: &ApplyOptions<'_>) -> Result<()> {
        if opts.targets == RenameTargets::NotApplicable {
            return Err(Error::Config("renaming needs --targets vars, funcs or both".into()));
        }
        match self {
            RenameScheme::Hash if opts.clock_stamp == 0 => {
                Err(Error::Config("hash renaming needs a positive --stamp".into()))
            }
            RenameScheme::Rephrase if opts.llm.is_none() => {
                Err(Error::Config("rephrase renaming needs an LLM gateway".into()))
            }
            _ => Ok(()),
        }
    }

    fn transform(
        &self,
        bug: &BugInstance,
        profile: &SubjectProfile,
        opts: &ApplyOptions<'_>,
        work: &Path,
    ) -> Result<ApplyOutcome> {
        let file = &bug.buggy_function.file;
        let occ = bug.function_occurrence;
        let trees = [
            Tree {
                src: work.join("buggy"),
                out: work.join("out/buggy"),
            },
            Tree {
                src: work.join("fixed"),
                out: work.join("out/fixed"),
            },
        ];
        checkout(bug, false, &trees[0].src)?;
        checkout(bug, true, &trees[1].src)?;

        let mut scopes = Vec::new();
        let mut calls: Vec<Option<CallSiteIndex>> = Vec::new();
        let mut taken = BTreeSet::new();
        for t in &trees {
            let text = fsutil::read_to_string(&t.src.join(file))?;
            scopes.push(resolve_function_scope(&text, profile, &bug.function_name, occ)?);
            taken.extend(project_identifiers(&t.src, profile));
            calls.push(
                opts.targets
                    .includes_funcs()
                    .then(|| index_call_sites(&t.src, profile, &bug.function_name)),
            );
        }
        for c in calls.iter().flatten() {
            if c.hazards.any() {
                return Ok(ApplyOutcome::Excluded(format!("hazard: {}", c.hazards.details)));
            }
        }
        let vars: BTreeSet<String> = scopes.iter().flat_map(|s| s.variable_names()).collect();
        if opts.targets == RenameTargets::Vars && vars.is_empty() {
            return Ok(ApplyOutcome::Excluded("no parameters or locals to rename".into()));
        }
        let funcs = BTreeSet::from([bug.function_name.clone()]);

        let plan: RenamePlan = match self {
            RenameScheme::Hash => hash_plan_for_names(&vars, &funcs, opts.targets, opts.clock_stamp, &taken)?,
            RenameScheme::Rephrase => {
                let llm = opts.llm.ok_or_else(|| Error::Config("no LLM gateway".into()))?;
                rephrase_plan_for_names(
                    &bug.buggy_function.text,
                    &vars,
                    &funcs,
                    opts.targets,
                    &taken,
                    profile,
                    llm,
                )?
            }
        };
        plan.validate(profile, &taken)?;

        let mut rewritten = 0;
        for ((t, scope), c) in trees.iter().zip(&scopes).zip(&calls) {
            let local = plan.restricted_to(&scope.variable_names());
            rewritten += apply_rename(&t.src, &t.out, &local, file, scope, c.as_ref())?.total();
            verify_renamed(&t.out, file, &bug.function_name, occ, &local, profile)?;
        }

        let transform = TransformDescriptor {
            scheme: match self {
                RenameScheme::Hash => TransformScheme::HashRename,
                RenameScheme::Rephrase => TransformScheme::RephraseRename,
            },
            targets: opts.targets,
            rename_map: plan.entries(),
            clock_stamp: plan.clock_stamp,
            hazards: calls[0].as_ref().map(|c| c.hazards.clone()),
            comment_mode: None,
            notes: format!("{rewritten} spans rewritten"),
        };
        let name = plan
            .funcs
            .get(&bug.function_name)
            .cloned()
            .unwrap_or_else(|| bug.function_name.clone());
        let [b, f] = trees;
        variant_for(bug, transform, name, b.out, f.out, profile)
    }
}

/// Comment insertion or removal inside the target function.
pub struct CommentScheme;

impl ApplyScheme for CommentScheme {
    fn name(&self) -> &'static str {
        "comments"
    }

    fn check(&self, _opts: &ApplyOptions<'_>) -> Result<()> {
        Ok(())
    }

    fn transform(
        &self,
        bug: &BugInstance,
        profile: &SubjectProfile,
        opts: &ApplyOptions<'_>,
        work: &Path,
    ) -> Result<ApplyOutcome> {
        let file = &bug.buggy_function.file;
        let mut changed = false;
        let mut roots = Vec::new();
        for (fixed, dir) in [(false, "buggy"), (true, "fixed")] {
            let root = work.join(dir);
            checkout(bug, fixed, &root)?;
            let path = root.join(file);
            let text = fsutil::read_to_string(&path)?;
            let (_, def) = locate_function_nth(&text, profile, &bug.function_name, bug.function_occurrence)?;
            let out = perturb_region(&text, def.span, profile, opts.comment_mode)?;
            changed |= out != text;
            fsutil::write(&path, out)?;
            roots.push(root);
        }
        if !changed {
            return Ok(ApplyOutcome::Excluded(format!(
                "{} leaves the function unchanged",
                opts.comment_mode.as_str()
            )));
        }
        let mut transform = TransformDescriptor::new(TransformScheme::CommentPerturb);
        transform.comment_mode = Some(opts.comment_mode);
        let fixed = roots.pop().expect("two roots");
        let buggy = roots.pop().expect("two roots");
        variant_for(bug, transform, bug.function_name.clone(), buggy, fixed, profile)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApplyReport {
    pub scheme: String,
    pub group: String,
    pub generated: Vec<String>,
    /// (bug id, reason)
    pub excluded: Vec<(String, String)>,
    pub failed: Vec<(String, String)>,
}

/// Generates and registers one Apply variant per eligible original bug.
/// Per-bug failures are collected, never fatal.
pub fn generate_apply_layer(
    bench: &mut Benchmark,
    scheme: &dyn ApplyScheme,
    opts: &ApplyOptions<'_>,
) -> Result<ApplyReport> {
    scheme.check(opts)?;
    let profile = bench.profile.clone();
    let bugs = bench.bugs.clone();
    let results = parallel_map(&bugs, opts.jobs, |bug| {
        let work = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
        let r = scheme.transform(bug, &profile, opts, work.path())?;
        Ok((work, r))
    });

    let mut report = ApplyReport {
        scheme: scheme.name().to_string(),
        ..Default::default()
    };
    for (bug, r) in bugs.iter().zip(results) {
        // keeps the scratch tree alive until registration copies it
        let r: Result<(tempfile::TempDir, ApplyOutcome)> = r;
        let (_work, r) = match r {
            Ok((w, o)) => (Some(w), Ok(o)),
            Err(e) => (None, Err(e)),
        };
        match r {
            Ok(ApplyOutcome::Variant(v)) => {
                report.group = v.transform.group();
                let set = VariantSet {
                    parent_id: bug.id.clone(),
                    layer: LayerTag::Apply,
                    variants: vec![*v],
                };
                match bench.register_variant_set(set) {
                    Ok(()) => report.generated.push(bug.id.clone()),
                    Err(e) => report.failed.push((bug.id.clone(), e.to_string())),
                }
            }
            Ok(ApplyOutcome::Excluded(reason)) => report.excluded.push((bug.id.clone(), reason)),
            Err(e) => report.failed.push((bug.id.clone(), e.to_string())),
        }
    }
    Ok(report)
}
