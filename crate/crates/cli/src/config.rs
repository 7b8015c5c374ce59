use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use layerbench::harness::AdapterConfig;
use layerbench::llm::ProviderConfig;
use layerbench::{Error, Result};
use serde::Deserialize;

/// `bench.toml`. Keys mirror the command-line flags; flags win.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub corpus: Option<PathBuf>,
    pub layer: Option<Vec<String>>,
    pub scheme: Option<String>,
    pub targets: Option<String>,
    pub stamp: Option<u64>,
    pub comment_mode: Option<String>,
    pub mode: Option<String>,
    pub count: Option<usize>,
    pub max_refine_iters: Option<u32>,
    pub search: Option<PathBuf>,
    pub workspace: Option<PathBuf>,
    pub adapter: Option<String>,
    pub run: Option<Vec<String>>,
    pub run_id: Option<String>,
    pub runs: Option<PathBuf>,
    pub format: Option<Vec<String>>,
    pub workers: Option<usize>,
    pub llm_mode: Option<String>,
    pub transcripts: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub timeout_s: Option<u64>,
    pub max_output_bytes: Option<usize>,
    /// Provider settings for live and record mode.
    pub llm: Option<ProviderConfig>,
    /// `[adapters.<name>]` tables, selected with `adapter`.
    #[serde(default)]
    pub adapters: BTreeMap<String, AdapterConfig>,
}

impl FileConfig {
    /// Reads `path`; relative paths inside are taken from its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: FileConfig = toml::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.message().to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.corpus,
            &mut cfg.search,
            &mut cfg.workspace,
            &mut cfg.runs,
            &mut cfg.transcripts,
            &mut cfg.out,
        ]
        .into_iter()
        .flatten()
        {
            *p = base.join(&*p);
        }
        if let Some(script) = cfg.llm.as_mut().and_then(|l| l.script.as_mut()) {
            *script = base.join(&*script);
        }
        Ok(cfg)
    }

    /// An adapter by section name, or one of the built-in reference kinds.
    pub fn adapter_config(&self, name: &str) -> Result<AdapterConfig> {
        if let Some(c) = self.adapters.get(name) {
            let mut c = c.clone();
            if c.id.is_empty() {
                c.id = name.to_string();
            }
            return Ok(c);
        }
        match name {
            "oracle" | "never" | "buggy" => Ok(AdapterConfig::builtin(name)),
            _ => Err(Error::Config(format!(
                "no [adapters.{name}] section and no built-in adapter of that name"
            ))),
        }
    }
}
