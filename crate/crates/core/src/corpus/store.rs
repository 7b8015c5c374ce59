use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::model::{
    variant_id, BugInstance, LayerTag, Provenance, SourceRegion, TransformDescriptor, Variant, VariantSet,
};
use crate::error::{Error, Result};
use crate::fsutil;
use crate::lang::{locate_function_nth, SubjectProfile};

fn default_tests_dest() -> PathBuf {
    PathBuf::from("tests")
}

fn default_layer() -> LayerTag {
    LayerTag::Remember
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub subject_language: String,
    pub bugs: Vec<ManifestBug>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestBug {
    pub id: String,
    pub project: String,
    pub buggy_file: PathBuf,
    pub function_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function_occurrence: Option<usize>,
    pub build_cmd: String,
    pub test_cmd: String,
    pub trigger_tests: Vec<String>,
    #[serde(default = "default_layer")]
    pub layer: LayerTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger_test_cmd: Option<String>,
    #[serde(default = "default_tests_dest")]
    pub tests_dest: PathBuf,
}

/// Per-variant metadata, stored as `variant.json` beside `transform.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantRecord {
    pub id: String,
    pub parent_id: String,
    pub project: String,
    pub buggy_file: PathBuf,
    pub function_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function_occurrence: Option<usize>,
    pub build_cmd: String,
    pub test_cmd: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger_test_cmd: Option<String>,
    pub trigger_tests: Vec<String>,
    pub layer: LayerTag,
    pub provenance: Provenance,
}

/// A loaded corpus: original bugs plus every registered variant.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub root: PathBuf,
    pub name: String,
    pub subject_language: String,
    pub profile: SubjectProfile,
    pub bugs: Vec<BugInstance>,
    pub variant_sets: Vec<VariantSet>,
}

/// One thing an agent is asked to repair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalUnit<'a> {
    pub parent_id: &'a str,
    pub variant_id: &'a str,
    pub layer: LayerTag,
    pub group: String,
    pub bug: &'a BugInstance,
}

fn region(
    root: &Path,
    file: &Path,
    function: &str,
    occurrence: Option<usize>,
    profile: &SubjectProfile,
    id: &str,
) -> Result<SourceRegion> {
    let path = root.join(file);
    if !path.is_file() {
        return Err(Error::DanglingReference {
            id: id.to_string(),
            path,
        });
    }
    let source = fsutil::read_to_string(&path)?;
    let (_, def) =
        locate_function_nth(&source, profile, function, occurrence).map_err(|e| Error::InvalidCorpusEntry {
            id: id.to_string(),
            reason: format!("{}: {e}", file.display()),
        })?;
    Ok(SourceRegion {
        file: file.to_path_buf(),
        span: def.span,
        text: def.text(&source).to_string(),
    })
}

fn require_dir(path: PathBuf, id: &str) -> Result<PathBuf> {
    if path.is_dir() {
        Ok(path)
    } else {
        Err(Error::DanglingReference {
            id: id.to_string(),
            path,
        })
    }
}

fn load_bug(root: &Path, entry: &ManifestBug, profile: &SubjectProfile) -> Result<BugInstance> {
    let base = root.join("bugs").join(&entry.id);
    let buggy_root = require_dir(base.join("buggy"), &entry.id)?;
    let fixed_root = require_dir(base.join("fixed"), &entry.id)?;
    let tests = base.join("tests");
    let tests_root = tests.is_dir().then_some(tests);
    if entry.trigger_tests.is_empty() {
        return Err(Error::InvalidCorpusEntry {
            id: entry.id.clone(),
            reason: "no trigger tests".into(),
        });
    }
    let buggy_function = region(
        &buggy_root,
        &entry.buggy_file,
        &entry.function_name,
        entry.function_occurrence,
        profile,
        &entry.id,
    )?;
    let fixed_function = region(
        &fixed_root,
        &entry.buggy_file,
        &entry.function_name,
        entry.function_occurrence,
        profile,
        &entry.id,
    )?;
    Ok(BugInstance {
        id: entry.id.clone(),
        parent_id: entry.id.clone(),
        project: entry.project.clone(),
        function_name: entry.function_name.clone(),
        function_occurrence: entry.function_occurrence,
        buggy_function,
        fixed_function,
        buggy_root,
        fixed_root,
        tests_root,
        tests_dest: entry.tests_dest.clone(),
        build_cmd: entry.build_cmd.clone(),
        test_cmd: entry.test_cmd.clone(),
        trigger_test_cmd: entry.trigger_test_cmd.clone(),
        trigger_tests: entry.trigger_tests.clone(),
        layer: entry.layer,
        provenance: Provenance::Original,
    })
}

impl VariantRecord {
    /// Metadata for a new variant of `bug` stored under `id`.
    pub fn describe(bug: &BugInstance, id: &str, layer: LayerTag) -> Self {
        VariantRecord {
            id: id.to_string(),
            parent_id: bug.parent_id.clone(),
            project: bug.project.clone(),
            buggy_file: bug.buggy_function.file.clone(),
            function_name: bug.function_name.clone(),
            function_occurrence: bug.function_occurrence,
            build_cmd: bug.build_cmd.clone(),
            test_cmd: bug.test_cmd.clone(),
            trigger_test_cmd: bug.trigger_test_cmd.clone(),
            trigger_tests: bug.trigger_tests.clone(),
            layer,
            provenance: bug.provenance,
        }
    }
}

/// Builds an instance from variant metadata and two complete trees (tests
/// included).
pub fn instance_from_record(
    record: VariantRecord,
    buggy_root: PathBuf,
    fixed_root: PathBuf,
    profile: &SubjectProfile,
) -> Result<BugInstance> {
    let buggy_root = require_dir(buggy_root, &record.id)?;
    let fixed_root = require_dir(fixed_root, &record.id)?;
    let occ = record.function_occurrence;
    let buggy_function = region(
        &buggy_root,
        &record.buggy_file,
        &record.function_name,
        occ,
        profile,
        &record.id,
    )?;
    let fixed_function = region(
        &fixed_root,
        &record.buggy_file,
        &record.function_name,
        occ,
        profile,
        &record.id,
    )?;
    Ok(BugInstance {
        id: record.id,
        parent_id: record.parent_id,
        project: record.project,
        function_name: record.function_name,
        function_occurrence: record.function_occurrence,
        buggy_function,
        fixed_function,
        buggy_root,
        fixed_root,
        tests_root: None,
        tests_dest: default_tests_dest(),
        build_cmd: record.build_cmd,
        test_cmd: record.test_cmd,
        trigger_test_cmd: record.trigger_test_cmd,
        trigger_tests: record.trigger_tests,
        layer: record.layer,
        provenance: record.provenance,
    })
}

fn load_variant(dir: &Path, profile: &SubjectProfile) -> Result<(BugInstance, TransformDescriptor)> {
    let record: VariantRecord = fsutil::read_json(&dir.join("variant.json"))?;
    let transform: TransformDescriptor = fsutil::read_json(&dir.join("transform.json"))?;
    let bug = instance_from_record(record, dir.join("buggy"), dir.join("fixed"), profile)?;
    Ok((bug, transform))
}

fn sorted_subdirs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let Ok(rd) = fs::read_dir(dir) else {
        return Ok(out);
    };
    for entry in rd {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if entry.path().is_dir() {
            out.push(entry.path());
        }
    }
    out.sort();
    Ok(out)
}

fn load_variant_sets(root: &Path, profile: &SubjectProfile) -> Result<Vec<VariantSet>> {
    let mut sets: BTreeMap<(LayerTag, String, String), VariantSet> = BTreeMap::new();
    for layer in LayerTag::ALL {
        let layer_dir = root.join("variants").join(layer.as_str());
        for parent_dir in sorted_subdirs(&layer_dir)? {
            let parent = parent_dir.file_name().unwrap().to_string_lossy().into_owned();
            let mut slots: Vec<(u32, PathBuf)> = sorted_subdirs(&parent_dir)?
                .into_iter()
                .filter_map(|d| {
                    let k = d.file_name()?.to_str()?.parse::<u32>().ok()?;
                    Some((k, d))
                })
                .collect();
            slots.sort();
            for (slot, dir) in slots {
                let (bug, transform) = load_variant(&dir, profile)?;
                let key = (layer, parent.clone(), transform.group());
                sets.entry(key)
                    .or_insert_with(|| VariantSet {
                        parent_id: parent.clone(),
                        layer,
                        variants: Vec::new(),
                    })
                    .variants
                    .push(Variant { slot, bug, transform });
            }
        }
    }
    Ok(sets.into_values().collect())
}

/// Loads `manifest.json` and every registered variant below `path`.
pub fn load_manifest(path: &Path) -> Result<Benchmark> {
    let manifest_path = path.join("manifest.json");
    if !manifest_path.is_file() {
        return Err(Error::MissingManifest(path.to_path_buf()));
    }
    let manifest: Manifest = fsutil::read_json(&manifest_path)?;
    let profile = SubjectProfile::resolve(&manifest.subject_language, Some(&path.join("profiles")))?;
    let mut seen = BTreeSet::new();
    for b in &manifest.bugs {
        if !seen.insert(b.id.clone()) {
            return Err(Error::DuplicateId(b.id.clone()));
        }
    }
    let bugs = manifest
        .bugs
        .iter()
        .map(|b| load_bug(path, b, &profile))
        .collect::<Result<Vec<_>>>()?;
    let variant_sets = load_variant_sets(path, &profile)?;
    for set in &variant_sets {
        if !seen.contains(&set.parent_id) {
            return Err(Error::UnknownParent(set.parent_id.clone()));
        }
        for v in &set.variants {
            if !seen.insert(v.bug.id.clone()) {
                return Err(Error::DuplicateId(v.bug.id.clone()));
            }
        }
    }
    Ok(Benchmark {
        root: path.to_path_buf(),
        name: manifest.name,
        subject_language: manifest.subject_language,
        profile,
        bugs,
        variant_sets,
    })
}

/// Copies a bug's buggy or fixed tree, with its test tree overlaid, into
/// `dest`.
pub fn checkout(bug: &BugInstance, fixed: bool, dest: &Path) -> Result<()> {
    let src = if fixed { &bug.fixed_root } else { &bug.buggy_root };
    fsutil::copy_dir_all(src, dest)?;
    if let Some(tests) = &bug.tests_root {
        fsutil::copy_dir_all(tests, &dest.join(&bug.tests_dest))?;
    }
    Ok(())
}

impl Benchmark {
    pub fn bug(&self, id: &str) -> Option<&BugInstance> {
        self.bugs.iter().find(|b| b.id == id)
    }

    /// Looks up an original bug or a registered variant by id.
    pub fn instance(&self, id: &str) -> Option<&BugInstance> {
        self.bug(id).or_else(|| {
            self.variant_sets
                .iter()
                .flat_map(|s| &s.variants)
                .map(|v| &v.bug)
                .find(|b| b.id == id)
        })
    }

    pub fn sets(&self, layer: LayerTag) -> impl Iterator<Item = &VariantSet> {
        self.variant_sets.iter().filter(move |s| s.layer == layer)
    }

    /// Everything to evaluate at `layer`, in deterministic order.
    pub fn eval_units(&self, layer: LayerTag) -> Vec<EvalUnit<'_>> {
        if layer == LayerTag::Remember {
            return self
                .bugs
                .iter()
                .map(|b| EvalUnit {
                    parent_id: &b.id,
                    variant_id: &b.id,
                    layer,
                    group: TransformDescriptor::original().group(),
                    bug: b,
                })
                .collect();
        }
        let mut units: Vec<EvalUnit<'_>> = self
            .sets(layer)
            .flat_map(|s| {
                s.variants.iter().map(move |v| EvalUnit {
                    parent_id: &s.parent_id,
                    variant_id: &v.bug.id,
                    layer,
                    group: v.transform.group(),
                    bug: &v.bug,
                })
            })
            .collect();
        units.sort_by(|a, b| (&a.group, a.parent_id, a.variant_id).cmp(&(&b.group, b.parent_id, b.variant_id)));
        units
    }

    /// Persists a variant set under `variants/<layer>/<parent>/<k>/`,
    /// replacing any earlier set of the same group for that parent.
    pub fn register_variant_set(&mut self, vs: VariantSet) -> Result<()> {
        if self.bug(&vs.parent_id).is_none() {
            return Err(Error::UnknownParent(vs.parent_id.clone()));
        }
        let invalid = |message: String| Error::InvalidVariantSet {
            parent: vs.parent_id.clone(),
            message,
        };
        let n = vs.variants.len();
        match vs.layer {
            LayerTag::Remember => return Err(invalid("remember layer holds originals only".into())),
            LayerTag::Apply if n != 1 => return Err(invalid(format!("apply sets hold exactly 1 variant, got {n}"))),
            LayerTag::Understand | LayerTag::Analyze if !(1..=5).contains(&n) => {
                return Err(invalid(format!("expected 1..=5 variants, got {n}")))
            }
            _ => {}
        }
        let group = vs.variants[0].transform.group();
        let mut slots = BTreeSet::new();
        for v in &vs.variants {
            if v.bug.parent_id != vs.parent_id {
                return Err(invalid(format!("variant {} has parent {}", v.bug.id, v.bug.parent_id)));
            }
            if v.transform.scheme.layer() != vs.layer || v.bug.layer != vs.layer {
                return Err(invalid(format!(
                    "variant {} does not belong to layer {}",
                    v.bug.id, vs.layer
                )));
            }
            if v.transform.group() != group {
                return Err(invalid("variants mix transform groups".into()));
            }
            v.transform.validate(&self.profile).map_err(invalid)?;
            if !slots.insert(v.slot) || v.slot == 0 {
                return Err(invalid(format!("bad or repeated slot {}", v.slot)));
            }
        }

        let parent_dir = self.root.join("variants").join(vs.layer.as_str()).join(&vs.parent_id);
        // drop the previous set of this group
        if let Some(pos) = self
            .variant_sets
            .iter()
            .position(|s| s.layer == vs.layer && s.parent_id == vs.parent_id && s.group().as_deref() == Some(&group))
        {
            let old = self.variant_sets.remove(pos);
            for v in old.variants {
                let dir = parent_dir.join(v.slot.to_string());
                fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            }
        }

        let mut stored = Vec::with_capacity(n);
        for v in &vs.variants {
            let dir = parent_dir.join(v.slot.to_string());
            if dir.exists() {
                fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            }
            checkout(&v.bug, false, &dir.join("buggy"))?;
            checkout(&v.bug, true, &dir.join("fixed"))?;
            let id = variant_id(&vs.parent_id, vs.layer, v.slot);
            let mut record = VariantRecord::describe(&v.bug, &id, vs.layer);
            record.parent_id = vs.parent_id.clone();
            fsutil::write_json(&dir.join("variant.json"), &record)?;
            fsutil::write_json(&dir.join("transform.json"), &v.transform)?;
            let (bug, transform) = load_variant(&dir, &self.profile)?;
            stored.push(Variant {
                slot: v.slot,
                bug,
                transform,
            });
        }
        self.variant_sets.push(VariantSet {
            parent_id: vs.parent_id,
            layer: vs.layer,
            variants: stored,
        });
        self.variant_sets
            .sort_by(|a, b| (a.layer, &a.parent_id, a.group()).cmp(&(b.layer, &b.parent_id, b.group())));
        Ok(())
    }

    /// Content digest of the manifest, bugs and variants.
    pub fn digest(&self) -> Result<String> {
        let mut parts = String::new();
        for sub in ["manifest.json", "bugs", "variants"] {
            let p = self.root.join(sub);
            let d = if p.is_file() {
                fsutil::sha256_hex(&fs::read(&p).map_err(|e| Error::io(&p, e))?)
            } else if p.is_dir() {
                fsutil::tree_digest(&p)?
            } else {
                String::new()
            };
            parts.push_str(&d);
            parts.push('\n');
        }
        Ok(fsutil::sha256_hex(parts.as_bytes()))
    }
}
