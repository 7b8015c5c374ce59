use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::exec::{execute_build_test, tail, ExecLimits};
use crate::corpus::{BugInstance, TaskBundle};
use crate::error::{Error, Result};
use crate::patch_eval::{write_patches, Patch};

pub const DEFAULT_ATTEMPT_BUDGET: u32 = 10;
pub const DEFAULT_ADAPTER_TIMEOUT_S: u64 = 1800;

/// One `[adapter.<name>]` table of the configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdapterConfig {
    #[serde(default)]
    pub id: String,
    /// Registered adapter kind; `command` runs `invoke_cmd`.
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invoke_cmd: Option<String>,
    #[serde(default = "default_budget")]
    pub attempt_budget: u32,
    #[serde(default = "default_timeout")]
    pub timeout_s: u64,
}

fn default_kind() -> String {
    "command".into()
}
fn default_budget() -> u32 {
    DEFAULT_ATTEMPT_BUDGET
}
fn default_timeout() -> u64 {
    DEFAULT_ADAPTER_TIMEOUT_S
}

impl AdapterConfig {
    pub fn builtin(kind: &str) -> Self {
        AdapterConfig {
            id: kind.to_string(),
            kind: kind.to_string(),
            invoke_cmd: None,
            attempt_budget: DEFAULT_ATTEMPT_BUDGET,
            timeout_s: DEFAULT_ADAPTER_TIMEOUT_S,
        }
    }

    pub fn command(id: &str, invoke_cmd: &str) -> Self {
        AdapterConfig {
            id: id.to_string(),
            kind: "command".into(),
            invoke_cmd: Some(invoke_cmd.to_string()),
            attempt_budget: DEFAULT_ATTEMPT_BUDGET,
            timeout_s: DEFAULT_ADAPTER_TIMEOUT_S,
        }
    }
}

/// What an adapter gets for one task. `oracle` is only consulted by the
/// built-in reference adapters; external systems see the bundle alone.
pub struct SueTask<'a> {
    pub bundle: &'a TaskBundle,
    pub out: &'a Path,
    pub oracle: &'a BugInstance,
}

/// How an invocation went, before its patches are read.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Invocation {
    /// Set when the adapter crashed, timed out or exited nonzero.
    pub failure: Option<String>,
}

/// A system under evaluation: reads a task bundle, leaves `patches.jsonl`
/// in its output directory.
pub trait SueAdapter: Send + Sync {
    fn id(&self) -> &str;
    fn attempt_budget(&self) -> u32;
    fn invoke(&self, task: &SueTask<'_>) -> Invocation;
}

/// Runs an external command built from a template with `{bundle}` and
/// `{out}` slots.
pub struct CommandAdapter {
    config: AdapterConfig,
    template: String,
}

impl CommandAdapter {
    pub fn new(config: AdapterConfig) -> Result<Self> {
        let template = config
            .invoke_cmd
            .clone()
            .ok_or_else(|| Error::Config(format!("adapter {:?} has no invoke_cmd", config.id)))?;
        for slot in ["{bundle}", "{out}"] {
            if !template.contains(slot) {
                return Err(Error::Config(format!(
                    "adapter {:?}: invoke_cmd lacks {slot}",
                    config.id
                )));
            }
        }
        Ok(CommandAdapter { config, template })
    }
}

fn shell_quote(p: &Path) -> String {
    format!("'{}'", p.display().to_string().replace('\'', r"'\''"))
}

impl SueAdapter for CommandAdapter {
    fn id(&self) -> &str {
        &self.config.id
    }

    fn attempt_budget(&self) -> u32 {
        self.config.attempt_budget
    }

    fn invoke(&self, task: &SueTask<'_>) -> Invocation {
        let cmd = self
            .template
            .replace("{bundle}", &shell_quote(&task.bundle.dir))
            .replace("{out}", &shell_quote(task.out));
        let limits = ExecLimits {
            timeout_s: self.config.timeout_s,
            ..ExecLimits::default()
        };
        let run = execute_build_test(&task.bundle.dir, &cmd, &limits);
        let failure = if run.timed_out {
            Some(format!("adapter timed out after {}s", self.config.timeout_s))
        } else if let Some(e) = &run.spawn_error {
            Some(format!("adapter could not start: {e}"))
        } else if !run.success() {
            let status = run.exit_code.map_or("killed".to_string(), |c| format!("exit code {c}"));
            Some(format!("adapter failed ({status}):\n{}", tail(&run.log(), 2000)))
        } else {
            None
        };
        Invocation { failure }
    }
}

/// Reference adapters that answer from the corpus itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    /// Proposes the oracle fix.
    Oracle,
    /// Proposes nothing.
    Never,
    /// Proposes the buggy function unchanged.
    Buggy,
}

pub struct ReferenceAdapter {
    config: AdapterConfig,
    kind: Reference,
}

impl ReferenceAdapter {
    pub fn new(config: AdapterConfig, kind: Reference) -> Self {
        ReferenceAdapter { config, kind }
    }
}

impl SueAdapter for ReferenceAdapter {
    fn id(&self) -> &str {
        &self.config.id
    }

    fn attempt_budget(&self) -> u32 {
        self.config.attempt_budget
    }

    fn invoke(&self, task: &SueTask<'_>) -> Invocation {
        let meta = &task.bundle.metadata;
        let text = match self.kind {
            Reference::Oracle => Some(&task.oracle.fixed_function.text),
            Reference::Buggy => Some(&task.oracle.buggy_function.text),
            Reference::Never => None,
        };
        let patches: Vec<Patch> = text
            .map(|t| Patch {
                bug_id: meta.parent_id.clone(),
                variant_id: meta.id.clone(),
                producer: self.config.id.clone(),
                attempt: 1,
                file: meta.buggy_file.clone(),
                function_name: meta.function_name.clone(),
                replacement: t.clone(),
            })
            .into_iter()
            .collect();
        let failure = write_patches(&task.out.join("patches.jsonl"), &patches)
            .err()
            .map(|e| e.to_string());
        Invocation { failure }
    }
}

type Factory = fn(AdapterConfig) -> Result<Box<dyn SueAdapter>>;

/// Adapter kinds by name.
pub struct AdapterKinds {
    kinds: BTreeMap<String, Factory>,
}

impl Default for AdapterKinds {
    fn default() -> Self {
        let mut r = AdapterKinds { kinds: BTreeMap::new() };
        r.register("command", |c| Ok(Box::new(CommandAdapter::new(c)?)));
        r.register("oracle", |c| Ok(Box::new(ReferenceAdapter::new(c, Reference::Oracle))));
        r.register("never", |c| Ok(Box::new(ReferenceAdapter::new(c, Reference::Never))));
        r.register("buggy", |c| Ok(Box::new(ReferenceAdapter::new(c, Reference::Buggy))));
        r
    }
}

impl AdapterKinds {
    pub fn register(&mut self, name: &str, factory: Factory) {
        self.kinds.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> Vec<&str> {
        self.kinds.keys().map(|s| s.as_str()).collect()
    }

    pub fn build(&self, mut config: AdapterConfig) -> Result<Box<dyn SueAdapter>> {
        if config.attempt_budget == 0 {
            return Err(Error::Config(format!(
                "adapter {:?}: attempt_budget must be at least 1",
                config.id
            )));
        }
        if config.id.is_empty() {
            config.id = config.kind.clone();
        }
        let factory = self.kinds.get(&config.kind).ok_or_else(|| Error::UnknownStrategy {
            kind: "adapter",
            name: config.kind.clone(),
        })?;
        factory(config)
    }
}

/// Patches returned by one adapter invocation plus anything worth noting.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SueOutput {
    pub patches: Vec<Patch>,
    pub notes: Vec<String>,
    /// The adapter itself failed; `patches` is empty.
    pub failure: Option<String>,
}

/// Invokes the adapter once and reads `{out}/patches.jsonl` leniently.
pub fn run_sue(adapter: &dyn SueAdapter, task: &SueTask<'_>) -> Result<SueOutput> {
    std::fs::create_dir_all(task.out).map_err(|e| Error::io(task.out, e))?;
    let inv = adapter.invoke(task);
    if let Some(f) = inv.failure {
        return Ok(SueOutput {
            failure: Some(f),
            ..Default::default()
        });
    }
    let path = task.out.join("patches.jsonl");
    let mut out = SueOutput::default();
    if !path.is_file() {
        out.notes.push("adapter wrote no patches.jsonl".into());
        return Ok(out);
    }
    let file = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    let budget = adapter.attempt_budget() as usize;
    let mut dropped = 0;
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(&path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut patch: Patch = match serde_json::from_str(&line) {
            Ok(p) => p,
            Err(e) => {
                out.notes.push(format!("patches.jsonl line {}: skipped, {e}", n + 1));
                continue;
            }
        };
        if out.patches.len() >= budget {
            dropped += 1;
            continue;
        }
        if patch.producer.is_empty() {
            patch.producer = adapter.id().to_string();
        }
        out.patches.push(patch);
    }
    if dropped > 0 {
        out.notes.push(format!(
            "{dropped} patch(es) over the attempt budget of {budget} dropped"
        ));
    }
    Ok(out)
}
