use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::lang::{HazardReport, Span};

/// The four implemented cognitive layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerTag {
    Remember,
    Understand,
    Apply,
    Analyze,
}

impl LayerTag {
    pub const ALL: [LayerTag; 4] = [
        LayerTag::Remember,
        LayerTag::Understand,
        LayerTag::Apply,
        LayerTag::Analyze,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            LayerTag::Remember => "remember",
            LayerTag::Understand => "understand",
            LayerTag::Apply => "apply",
            LayerTag::Analyze => "analyze",
        }
    }

    /// Layers whose bugs carry several variants scored by FIX class.
    pub fn is_multi_variant(&self) -> bool {
        matches!(self, LayerTag::Understand | LayerTag::Analyze)
    }
}

impl fmt::Display for LayerTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LayerTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "remember" => Ok(LayerTag::Remember),
            "understand" => Ok(LayerTag::Understand),
            "apply" => Ok(LayerTag::Apply),
            "analyze" => Ok(LayerTag::Analyze),
            other => Err(Error::Config(format!("unknown layer {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Original,
    Synthetic,
    Injected,
    Perturbed,
}

/// A function's location and full text (declaration through closing brace).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRegion {
    /// Relative to the project root.
    pub file: PathBuf,
    pub span: Span,
    pub text: String,
}

/// One buggy/fixed/tests triple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugInstance {
    pub id: String,
    /// Root bug this instance derives from; equal to `id` for originals.
    pub parent_id: String,
    pub project: String,
    pub function_name: String,
    /// Which same-name definition in the file, for overloaded names.
    pub function_occurrence: Option<usize>,
    pub buggy_function: SourceRegion,
    pub fixed_function: SourceRegion,
    pub buggy_root: PathBuf,
    pub fixed_root: PathBuf,
    /// Test tree overlaid onto both checkouts at `tests_dest`, if separate.
    pub tests_root: Option<PathBuf>,
    pub tests_dest: PathBuf,
    pub build_cmd: String,
    pub test_cmd: String,
    /// Runs a single test; `{test}` is replaced by the test id.
    pub trigger_test_cmd: Option<String>,
    pub trigger_tests: Vec<String>,
    pub layer: LayerTag,
    pub provenance: Provenance,
}

impl BugInstance {
    pub fn trigger_command(&self, test: &str) -> Option<String> {
        self.trigger_test_cmd.as_ref().map(|t| t.replace("{test}", test))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformScheme {
    Original,
    HashRename,
    RephraseRename,
    CommentPerturb,
    SyntheticRootCause,
    SyntheticBehavior,
    CloneInjection,
}

impl TransformScheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            TransformScheme::Original => "original",
            TransformScheme::HashRename => "hash_rename",
            TransformScheme::RephraseRename => "rephrase_rename",
            TransformScheme::CommentPerturb => "comment_perturb",
            TransformScheme::SyntheticRootCause => "synthetic_root_cause",
            TransformScheme::SyntheticBehavior => "synthetic_behavior",
            TransformScheme::CloneInjection => "clone_injection",
        }
    }

    pub fn layer(&self) -> LayerTag {
        match self {
            TransformScheme::Original => LayerTag::Remember,
            TransformScheme::HashRename | TransformScheme::RephraseRename | TransformScheme::CommentPerturb => {
                LayerTag::Apply
            }
            TransformScheme::SyntheticRootCause | TransformScheme::SyntheticBehavior => LayerTag::Understand,
            TransformScheme::CloneInjection => LayerTag::Analyze,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenameTargets {
    Vars,
    Funcs,
    Both,
    #[serde(rename = "n/a")]
    NotApplicable,
}

impl RenameTargets {
    pub fn as_str(&self) -> &'static str {
        match self {
            RenameTargets::Vars => "vars",
            RenameTargets::Funcs => "funcs",
            RenameTargets::Both => "both",
            RenameTargets::NotApplicable => "n/a",
        }
    }

    pub fn includes_vars(&self) -> bool {
        matches!(self, RenameTargets::Vars | RenameTargets::Both)
    }

    pub fn includes_funcs(&self) -> bool {
        matches!(self, RenameTargets::Funcs | RenameTargets::Both)
    }
}

impl FromStr for RenameTargets {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vars" => Ok(RenameTargets::Vars),
            "funcs" => Ok(RenameTargets::Funcs),
            "both" => Ok(RenameTargets::Both),
            other => Err(Error::Config(format!("unknown rename targets {other:?}"))),
        }
    }
}

/// Comment perturbation modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommentMode {
    AddTextual,
    RemoveAll,
    AddCodeComments,
}

impl CommentMode {
    pub const ALL: [CommentMode; 3] = [
        CommentMode::AddTextual,
        CommentMode::RemoveAll,
        CommentMode::AddCodeComments,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CommentMode::AddTextual => "add_textual",
            CommentMode::RemoveAll => "remove_all",
            CommentMode::AddCodeComments => "add_code_comments",
        }
    }
}

impl FromStr for CommentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CommentMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown comment mode {s:?}")))
    }
}

/// What produced a variant. Serialized as the variant's `transform.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformDescriptor {
    pub scheme: TransformScheme,
    pub targets: RenameTargets,
    #[serde(default)]
    pub rename_map: BTreeMap<String, String>,
    #[serde(default)]
    pub clock_stamp: Option<u64>,
    #[serde(default)]
    pub hazards: Option<HazardReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment_mode: Option<CommentMode>,
    #[serde(default)]
    pub notes: String,
}

impl TransformDescriptor {
    pub fn original() -> Self {
        Self {
            scheme: TransformScheme::Original,
            targets: RenameTargets::NotApplicable,
            rename_map: BTreeMap::new(),
            clock_stamp: None,
            hazards: None,
            comment_mode: None,
            notes: String::new(),
        }
    }

    pub fn new(scheme: TransformScheme) -> Self {
        Self {
            scheme,
            ..Self::original()
        }
    }

    /// Key under which variants are grouped for scoring, e.g.
    /// `hash_rename/vars` or `synthetic_root_cause`.
    pub fn group(&self) -> String {
        match self.scheme {
            TransformScheme::HashRename | TransformScheme::RephraseRename => {
                format!("{}/{}", self.scheme.as_str(), self.targets.as_str())
            }
            TransformScheme::CommentPerturb => format!(
                "{}/{}",
                self.scheme.as_str(),
                self.comment_mode.map(|m| m.as_str()).unwrap_or("unknown")
            ),
            other => other.as_str().to_string(),
        }
    }

    /// First variant slot of this descriptor's group under its parent.
    ///
    /// Apply-layer groups each own one fixed slot; understand groups own a
    /// block of five.
    pub fn slot_base(&self) -> u32 {
        let target_offset = match self.targets {
            RenameTargets::Vars | RenameTargets::NotApplicable => 0,
            RenameTargets::Funcs => 1,
            RenameTargets::Both => 2,
        };
        match self.scheme {
            TransformScheme::Original => 1,
            TransformScheme::HashRename => 1 + target_offset,
            TransformScheme::RephraseRename => 4 + target_offset,
            TransformScheme::CommentPerturb => match self.comment_mode {
                Some(CommentMode::AddTextual) | None => 7,
                Some(CommentMode::RemoveAll) => 8,
                Some(CommentMode::AddCodeComments) => 9,
            },
            TransformScheme::SyntheticRootCause => 1,
            TransformScheme::SyntheticBehavior => 6,
            TransformScheme::CloneInjection => 1,
        }
    }

    pub fn validate(&self, profile: &crate::lang::SubjectProfile) -> Result<(), String> {
        let renames = matches!(
            self.scheme,
            TransformScheme::HashRename | TransformScheme::RephraseRename
        );
        if !renames && !self.rename_map.is_empty() {
            return Err("rename_map must be empty for non-renaming schemes".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for new in self.rename_map.values() {
            if !profile.is_valid_identifier(new) {
                return Err(format!("{new:?} is not a valid identifier"));
            }
            if !seen.insert(new) {
                return Err(format!("{new:?} used twice"));
            }
        }
        Ok(())
    }
}

/// One generated variant of a bug.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variant {
    /// 1-based slot under `variants/<layer>/<parent>/`.
    pub slot: u32,
    pub bug: BugInstance,
    pub transform: TransformDescriptor,
}

/// Variants of one parent bug generated by one scheme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariantSet {
    pub parent_id: String,
    pub layer: LayerTag,
    pub variants: Vec<Variant>,
}

impl VariantSet {
    pub fn group(&self) -> Option<String> {
        self.variants.first().map(|v| v.transform.group())
    }
}

/// `<parent>-<layer>-v<slot>`; slots only number variants within a layer.
pub fn variant_id(parent_id: &str, layer: LayerTag, slot: u32) -> String {
    format!("{parent_id}-{layer}-v{slot}")
}
