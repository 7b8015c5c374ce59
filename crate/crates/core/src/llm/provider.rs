use std::collections::{BTreeMap, VecDeque};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::gateway::CompletionRequest;
use crate::error::{Error, Result};
use crate::fsutil;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProviderError {
    pub retryable: bool,
    pub message: String,
}

/// A chat-completion backend.
pub trait Provider: Send + Sync {
    fn name(&self) -> &str;
    fn model(&self) -> &str;
    fn complete(&self, prompt: &str, req: &CompletionRequest) -> std::result::Result<String, ProviderError>;
}

fn default_provider() -> String {
    "openai".into()
}

fn default_model() -> String {
    "gpt-4o".into()
}

fn default_key_env() -> String {
    "OPENAI_API_KEY".into()
}

fn default_retries() -> u32 {
    3
}

fn default_backoff() -> u64 {
    500
}

fn default_timeout() -> u64 {
    120
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    #[serde(default = "default_provider")]
    pub provider: String,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default)]
    pub endpoint: Option<String>,
    /// Name of the environment variable holding the API key.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff")]
    pub retry_backoff_ms: u64,
    #[serde(default = "default_timeout")]
    pub timeout_s: u64,
    #[serde(default)]
    pub requests_per_minute: Option<u32>,
    /// Rules file for the scripted provider.
    #[serde(default)]
    pub script: Option<PathBuf>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

impl ProviderConfig {
    /// `LAYERBENCH_LLM_{PROVIDER,MODEL,ENDPOINT,KEY_ENV}` override the file.
    pub fn apply_env(mut self) -> Self {
        let var = |k: &str| {
            std::env::var(format!("LAYERBENCH_LLM_{k}"))
                .ok()
                .filter(|v| !v.is_empty())
        };
        if let Some(v) = var("PROVIDER") {
            self.provider = v;
        }
        if let Some(v) = var("MODEL") {
            self.model = v;
        }
        if let Some(v) = var("ENDPOINT") {
            self.endpoint = Some(v);
        }
        if let Some(v) = var("KEY_ENV") {
            self.api_key_env = v;
        }
        self
    }
}

type Factory = fn(&ProviderConfig) -> Result<Box<dyn Provider>>;

/// Provider constructors by name.
pub struct ProviderRegistry {
    factories: BTreeMap<String, Factory>,
}

impl Default for ProviderRegistry {
    fn default() -> Self {
        let mut r = ProviderRegistry {
            factories: BTreeMap::new(),
        };
        r.register("openai", |c| Ok(Box::new(OpenAiProvider::new(c)?)));
        r.register("scripted", |c| {
            let path = c
                .script
                .as_ref()
                .ok_or_else(|| Error::Config("scripted provider needs `script`".into()))?;
            Ok(Box::new(ScriptedProvider::from_file(path, &c.model)?))
        });
        r
    }
}

impl ProviderRegistry {
    pub fn register(&mut self, name: &str, factory: Factory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn create(&self, config: &ProviderConfig) -> Result<Box<dyn Provider>> {
        let f = self
            .factories
            .get(&config.provider)
            .ok_or_else(|| Error::UnknownProvider(config.provider.clone()))?;
        f(config)
    }
}

/// OpenAI-compatible `/chat/completions` over HTTP.
pub struct OpenAiProvider {
    model: String,
    url: String,
    key: String,
    client: reqwest::blocking::Client,
}

impl OpenAiProvider {
    pub fn new(config: &ProviderConfig) -> Result<Self> {
        let key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| Error::MissingCredentials(config.api_key_env.clone()))?;
        let base = config
            .endpoint
            .clone()
            .unwrap_or_else(|| "https://api.openai.com/v1".into());
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_s))
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        Ok(OpenAiProvider {
            model: config.model.clone(),
            url: format!("{}/chat/completions", base.trim_end_matches('/')),
            key,
            client,
        })
    }
}

impl Provider for OpenAiProvider {
    fn name(&self) -> &str {
        "openai"
    }

    fn model(&self) -> &str {
        &self.model
    }

    fn complete(&self, prompt: &str, req: &CompletionRequest) -> std::result::Result<String, ProviderError> {
        let body = serde_json::json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        });
        let resp = self
            .client
            .post(&self.url)
            .bearer_auth(&self.key)
            .json(&body)
            .send()
            .map_err(|e| ProviderError {
                retryable: true,
                message: e.to_string(),
            })?;
        let status = resp.status();
        let text = resp.text().unwrap_or_default();
        if !status.is_success() {
            return Err(ProviderError {
                retryable: status.as_u16() == 429 || status.is_server_error(),
                message: format!("HTTP {status}: {}", text.chars().take(500).collect::<String>()),
            });
        }
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| ProviderError {
            retryable: false,
            message: format!("bad response body: {e}"),
        })?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| ProviderError {
                retryable: false,
                message: "response has no message content".into(),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptRule {
    pub template: String,
    /// Every string must occur in the rendered prompt.
    #[serde(default)]
    pub contains: Vec<String>,
    pub responses: Vec<String>,
    /// Keep answering with the last response once the queue runs dry.
    #[serde(default)]
    pub repeat: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Script {
    pub rules: Vec<ScriptRule>,
}

/// Answers from a fixed rule list; used to record transcripts without a
/// network.
pub struct ScriptedProvider {
    model: String,
    rules: Mutex<Vec<(ScriptRule, VecDeque<String>)>>,
}

impl ScriptedProvider {
    pub fn new(model: &str, script: Script) -> Self {
        ScriptedProvider {
            model: model.to_string(),
            rules: Mutex::new(
                script
                    .rules
                    .into_iter()
                    .map(|r| {
                        let q = r.responses.iter().cloned().collect();
                        (r, q)
                    })
                    .collect(),
            ),
        }
    }

    pub fn from_file(path: &Path, model: &str) -> Result<Self> {
        Ok(ScriptedProvider::new(model, fsutil::read_json(path)?))
    }
}

impl Provider for ScriptedProvider {
    fn name(&self) -> &str {
        "scripted"
    }

    fn model(&self) -> &str {
        &self.model
    }

    fn complete(&self, prompt: &str, req: &CompletionRequest) -> std::result::Result<String, ProviderError> {
        let mut rules = self.rules.lock().unwrap();
        for (rule, queue) in rules.iter_mut() {
            if rule.template != req.template_id || !rule.contains.iter().all(|c| prompt.contains(c.as_str())) {
                continue;
            }
            match queue.len() {
                0 => continue,
                1 if rule.repeat => return Ok(queue[0].clone()),
                _ => return Ok(queue.pop_front().unwrap()),
            }
        }
        Err(ProviderError {
            retryable: false,
            message: format!("no scripted response for {}", req.template_id),
        })
    }
}
