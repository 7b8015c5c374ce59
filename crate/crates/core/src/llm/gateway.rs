use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::provider::Provider;
use super::template::TemplateSet;
use super::transcript::{TranscriptEntry, TranscriptStore};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LlmMode {
    Live,
    Record,
    Replay,
}

impl FromStr for LlmMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "live" => Ok(LlmMode::Live),
            "record" => Ok(LlmMode::Record),
            "replay" => Ok(LlmMode::Replay),
            other => Err(Error::Config(format!("unknown llm mode {other:?}"))),
        }
    }
}

impl fmt::Display for LlmMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LlmMode::Live => "live",
            LlmMode::Record => "record",
            LlmMode::Replay => "replay",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub template_id: String,
    pub slots: BTreeMap<String, String>,
    pub max_tokens: u32,
    pub temperature: f64,
}

impl CompletionRequest {
    pub fn new(template_id: &str) -> Self {
        CompletionRequest {
            template_id: template_id.to_string(),
            slots: BTreeMap::new(),
            max_tokens: 4096,
            temperature: 0.0,
        }
    }

    pub fn slot(mut self, name: &str, value: impl Into<String>) -> Self {
        self.slots.insert(name.to_string(), value.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(Error::InvalidRequest(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(Error::InvalidRequest("max_tokens must be positive".into()));
        }
        Ok(())
    }
}

/// Digest of (template id, rendered prompt, model, temperature).
pub fn cache_key(template_id: &str, prompt: &str, model: &str, temperature: f64) -> String {
    let mut h = Sha256::new();
    for part in [template_id, prompt, model, &format!("{temperature:?}")] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    hex::encode(h.finalize())
}

/// Shared request budget: `capacity` requests at once, refilled evenly over
/// a minute.
pub struct TokenBucket {
    capacity: f64,
    per_second: f64,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    pub fn per_minute(n: u32) -> Self {
        let capacity = n.max(1) as f64;
        TokenBucket {
            capacity,
            per_second: capacity / 60.0,
            state: Mutex::new((capacity, Instant::now())),
        }
    }

    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut s = self.state.lock().unwrap();
                let now = Instant::now();
                let refill = now.duration_since(s.1).as_secs_f64() * self.per_second;
                s.0 = (s.0 + refill).min(self.capacity);
                s.1 = now;
                if s.0 >= 1.0 {
                    s.0 -= 1.0;
                    return;
                }
                (1.0 - s.0) / self.per_second
            };
            std::thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

type Shared = Arc<(Mutex<Option<std::result::Result<String, String>>>, Condvar)>;

/// Renders prompts and answers them live, through a recording cache, or
/// from transcripts only.
pub struct LlmGateway {
    mode: LlmMode,
    model: String,
    templates: TemplateSet,
    provider: Option<Box<dyn Provider>>,
    transcripts: TranscriptStore,
    bucket: Option<TokenBucket>,
    max_retries: u32,
    backoff: Duration,
    inflight: Mutex<HashMap<String, Shared>>,
    provider_calls: AtomicUsize,
}

impl LlmGateway {
    /// Replay needs no provider; live and record do.
    pub fn new(
        mode: LlmMode,
        model: &str,
        provider: Option<Box<dyn Provider>>,
        transcripts: TranscriptStore,
    ) -> Result<Self> {
        if mode != LlmMode::Replay && provider.is_none() {
            return Err(Error::Config(format!("{mode} mode needs a provider")));
        }
        Ok(LlmGateway {
            mode,
            model: model.to_string(),
            templates: TemplateSet::builtin(),
            provider,
            transcripts,
            bucket: None,
            max_retries: 3,
            backoff: Duration::from_millis(500),
            inflight: Mutex::new(HashMap::new()),
            provider_calls: AtomicUsize::new(0),
        })
    }

    pub fn replay(model: &str, transcripts: TranscriptStore) -> Self {
        LlmGateway::new(LlmMode::Replay, model, None, transcripts).expect("replay needs no provider")
    }

    pub fn with_templates(mut self, templates: TemplateSet) -> Self {
        self.templates = templates;
        self
    }

    pub fn with_rate_limit(mut self, per_minute: Option<u32>) -> Self {
        self.bucket = per_minute.map(TokenBucket::per_minute);
        self
    }

    pub fn with_retries(mut self, max_retries: u32, backoff: Duration) -> Self {
        self.max_retries = max_retries;
        self.backoff = backoff;
        self
    }

    pub fn mode(&self) -> LlmMode {
        self.mode
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn templates(&self) -> &TemplateSet {
        &self.templates
    }

    pub fn transcripts(&self) -> &TranscriptStore {
        &self.transcripts
    }

    /// Requests that reached the provider.
    pub fn provider_calls(&self) -> usize {
        self.provider_calls.load(Ordering::SeqCst)
    }

    pub fn render(&self, req: &CompletionRequest) -> Result<String> {
        self.templates.render(&req.template_id, &req.slots)
    }

    pub fn key_for(&self, req: &CompletionRequest) -> Result<String> {
        Ok(cache_key(
            &req.template_id,
            &self.render(req)?,
            &self.model,
            req.temperature,
        ))
    }

    pub fn complete(&self, req: &CompletionRequest) -> Result<String> {
        req.validate()?;
        let prompt = self.render(req)?;
        let key = cache_key(&req.template_id, &prompt, &self.model, req.temperature);
        if let Some(hit) = self.transcripts.get(&key) {
            return Ok(hit.response);
        }
        if self.mode == LlmMode::Replay {
            return Err(Error::TranscriptMiss {
                key,
                template: req.template_id.clone(),
            });
        }

        // a second identical request waits for the first
        let (shared, owner) = {
            let mut map = self.inflight.lock().unwrap();
            match map.get(&key) {
                Some(s) => (s.clone(), false),
                None => {
                    let s: Shared = Arc::new((Mutex::new(None), Condvar::new()));
                    map.insert(key.clone(), s.clone());
                    (s, true)
                }
            }
        };
        if !owner {
            let (lock, cv) = &*shared;
            let mut slot = lock.lock().unwrap();
            while slot.is_none() {
                slot = cv.wait(slot).unwrap();
            }
            return slot
                .clone()
                .unwrap()
                .map_err(|message| Error::Provider { attempts: 0, message });
        }

        let result = self.call_provider(&prompt, req).and_then(|response| {
            let entry = TranscriptEntry {
                key: key.clone(),
                template_id: req.template_id.clone(),
                model: self.model.clone(),
                temperature: req.temperature,
                prompt: prompt.clone(),
                response: response.clone(),
            };
            if self.mode == LlmMode::Record {
                self.transcripts.insert(entry)?;
            }
            Ok(response)
        });
        let (lock, cv) = &*shared;
        *lock.lock().unwrap() = Some(result.as_ref().map(Clone::clone).map_err(|e| e.to_string()));
        cv.notify_all();
        self.inflight.lock().unwrap().remove(&key);
        result
    }

    fn call_provider(&self, prompt: &str, req: &CompletionRequest) -> Result<String> {
        let provider = self.provider.as_ref().expect("checked at construction");
        let mut attempts = 0;
        loop {
            if let Some(b) = &self.bucket {
                b.acquire();
            }
            attempts += 1;
            self.provider_calls.fetch_add(1, Ordering::SeqCst);
            match provider.complete(prompt, req) {
                Ok(text) => return Ok(text),
                Err(e) if e.retryable && attempts <= self.max_retries => {
                    log::warn!("{} attempt {attempts} failed: {}", provider.name(), e.message);
                    std::thread::sleep(self.backoff * 2u32.saturating_pow(attempts - 1));
                }
                Err(e) => {
                    return Err(Error::Provider {
                        attempts,
                        message: e.message,
                    })
                }
            }
        }
    }
}
